use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::model::{Assignment, CausalGraph, VarName};
use crate::parameterize::DistributionRequest;
use crate::ring::Rational;

use super::{DistributionTable, Value, VerifyError};

/// `{t: {var: val}, entries: [{v: {var: val}, p}]}` where `p` is a string
/// (`"num/den"`, exact) or a number (decimal).
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct TableJson {
    pub t: BTreeMap<String, u32>,
    pub entries: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct EntryJson {
    pub v: BTreeMap<String, u32>,
    pub p: Json,
}

fn fmt_err(e: impl std::fmt::Display) -> VerifyError {
    VerifyError::Format(e.to_string())
}

fn to_assignment(g: &CausalGraph, map: &BTreeMap<String, u32>) -> Result<Assignment, VerifyError> {
    let raw = Assignment::from_pairs(map.iter().map(|(k, v)| (VarName::from(k.as_str()), *v)));
    Ok(g.canonical_assignment(&raw)?)
}

fn parse_value(p: &Json) -> Result<Value, VerifyError> {
    match p {
        Json::String(s) => s.parse::<Rational>().map(Value::Exact).map_err(fmt_err),
        Json::Number(n) => n.as_f64().map(Value::Approx).ok_or_else(|| fmt_err(format!("bad number {n}"))),
        other => Err(fmt_err(format!("probability must be a string or number, got {other}"))),
    }
}

fn value_json(x: &Value) -> Json {
    match x {
        Value::Exact(r) => Json::String(r.to_string()),
        Value::Approx(f) => serde_json::Number::from_f64(*f).map(Json::Number).unwrap_or(Json::Null),
    }
}

fn map_of(a: &Assignment) -> BTreeMap<String, u32> {
    a.iter().map(|(n, v)| (n.to_string(), v)).collect()
}

impl DistributionTable {
    pub fn to_json(&self) -> TableJson {
        TableJson {
            t: map_of(&self.request.t),
            entries: self.entries.iter().map(|(v, p)| EntryJson { v: map_of(v), p: value_json(p) }).collect(),
        }
    }

    pub fn from_json(g: &CausalGraph, json: &TableJson) -> Result<Self, VerifyError> {
        let t = to_assignment(g, &json.t)?;
        let mut entries = BTreeMap::new();
        for e in &json.entries {
            let v = to_assignment(g, &e.v)?;
            if entries.insert(v.clone(), parse_value(&e.p)?).is_some() {
                return Err(fmt_err(format!("duplicate entry `{v}` in table for [{t}]")));
            }
        }
        Ok(DistributionTable { request: DistributionRequest::new(t), entries })
    }
}

/// Reads a JSON array of tables and validates each against `g`.
pub fn read_tables_json(g: &CausalGraph, reader: impl Read, tol: f64) -> Result<Vec<DistributionTable>, VerifyError> {
    let raw: Vec<TableJson> = serde_json::from_reader(reader).map_err(fmt_err)?;
    let tables = raw.iter().map(|t| DistributionTable::from_json(g, t)).collect::<Result<Vec<_>, _>>()?;
    for t in &tables {
        t.validate(g, tol)?;
    }
    Ok(tables)
}

pub fn write_tables_json(tables: &[DistributionTable], mut writer: impl Write) -> Result<(), VerifyError> {
    let json: Vec<TableJson> = tables.iter().map(DistributionTable::to_json).collect();
    serde_json::to_writer_pretty(&mut writer, &json).map_err(fmt_err)?;
    writeln!(writer).map_err(fmt_err)
}

/// CSV with one column per observed variable holding its free value, one
/// `do(NAME)` column per observed variable holding its intervened value,
/// and `p`. Several tables may share a file.
pub fn write_tables_csv(g: &CausalGraph, tables: &[DistributionTable], writer: impl Write) -> Result<(), VerifyError> {
    let names = g.observed_names();
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = names.iter().map(|n| n.to_string()).collect();
    header.extend(names.iter().map(|n| format!("do({n})")));
    header.push("p".into());
    w.write_record(&header).map_err(fmt_err)?;
    for tb in tables {
        for (v, p) in &tb.entries {
            let mut row: Vec<String> = names.iter().map(|n| v.get(n).map(|x| x.to_string()).unwrap_or_default()).collect();
            row.extend(names.iter().map(|n| tb.request.t.get(n).map(|x| x.to_string()).unwrap_or_default()));
            row.push(p.to_string());
            w.write_record(&row).map_err(fmt_err)?;
        }
    }
    w.flush().map_err(fmt_err)
}

/// Reads the CSV form of [`write_tables_csv`]. A `p` cell containing `/`
/// or written as an integer is exact; any other number is a decimal. The
/// `do(...)` columns may be omitted for observational data.
pub fn read_tables_csv(g: &CausalGraph, reader: impl Read, tol: f64) -> Result<Vec<DistributionTable>, VerifyError> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers().map_err(fmt_err)?.iter().map(|s| s.trim().to_string()).collect();
    let p_col = header.iter().position(|h| h == "p").ok_or_else(|| fmt_err("missing `p` column"))?;
    let mut tables: BTreeMap<Assignment, BTreeMap<Assignment, Value>> = BTreeMap::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(fmt_err)?;
        let mut t = BTreeMap::new();
        let mut v = BTreeMap::new();
        for (k, cell) in rec.iter().enumerate() {
            let cell = cell.trim();
            if k == p_col || cell.is_empty() {
                continue;
            }
            let val: u32 = cell.parse().map_err(|_| fmt_err(format!("row {}: bad value `{cell}`", line + 2)))?;
            match header[k].strip_prefix("do(").and_then(|s| s.strip_suffix(')')) {
                Some(name) => t.insert(name.to_string(), val),
                None => v.insert(header[k].clone(), val),
            };
        }
        let cell = rec.get(p_col).unwrap_or("").trim();
        let p = if cell.contains('/') || cell.parse::<i64>().is_ok() {
            Value::Exact(cell.parse().map_err(fmt_err)?)
        } else {
            Value::Approx(cell.parse().map_err(|_| fmt_err(format!("row {}: bad probability `{cell}`", line + 2)))?)
        };
        let (t, v) = (to_assignment(g, &t)?, to_assignment(g, &v)?);
        if tables.entry(t.clone()).or_default().insert(v.clone(), p).is_some() {
            return Err(fmt_err(format!("duplicate entry `{v}` in table for [{t}]")));
        }
    }
    let tables: Vec<DistributionTable> = tables
        .into_iter()
        .map(|(t, entries)| DistributionTable { request: DistributionRequest::new(t), entries })
        .collect();
    for t in &tables {
        t.validate(g, tol)?;
    }
    Ok(tables)
}
