//! Forward computation of interventional distributions from model
//! parameters, and evaluation of constraints on distribution tables.

mod io;

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kernel::ConstraintSet;
use crate::model::{Assignment, CausalGraph, GraphError};
use crate::parameterize::{free_variables, model_param_groups, DistributionRequest, ParamError, ParamId};
use crate::ring::{Budget, MonomialOrder, Polynomial, Rational, RingError};

pub use io::{read_tables_csv, read_tables_json, write_tables_csv, write_tables_json, TableJson};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("model point has no value for `{0}`")]
    MissingModelParam(String),
    #[error("model point is not a valid distribution: {0}")]
    InvalidPoint(String),
    #[error("no table provides `{0}`")]
    MissingEntry(String),
    #[error("table for [{request}] is missing the entry `{entry}`")]
    IncompleteTable { request: String, entry: String },
    #[error("table for [{request}] has an entry for `{entry}`, which is not a free assignment")]
    UnexpectedEntry { request: String, entry: String },
    #[error("two tables for [{0}]")]
    DuplicateTable(String),
    #[error("table for [{request}] is invalid: {reason}")]
    InvalidTable { request: String, reason: String },
    #[error("{0}")]
    Format(String),
}

/// Values for every `q` and `r` parameter of a graph.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelPoint {
    pub values: BTreeMap<ParamId, Rational>,
}

impl ModelPoint {
    pub fn get(&self, id: &ParamId) -> Option<&Rational> {
        self.values.get(id)
    }

    /// Checks that every parameter is present, within `[0, 1]`, and that
    /// each conditional distribution sums to exactly one.
    pub fn validate(&self, g: &CausalGraph) -> Result<(), VerifyError> {
        for group in model_param_groups(g) {
            let mut total = Rational::zero();
            for id in &group {
                let x = self.get(id).ok_or_else(|| VerifyError::MissingModelParam(id.to_string()))?;
                if x.is_negative() || *x > Rational::one() {
                    return Err(VerifyError::InvalidPoint(format!("{id} = {x}")));
                }
                total = &total + x;
            }
            if !total.is_one() {
                return Err(VerifyError::InvalidPoint(format!("{} sums to {total}", group[0])));
            }
        }
        Ok(())
    }
}

/// A positive rational point with denominators at most 1000, fixed by
/// `seed`.
pub fn random_model(g: &CausalGraph, seed: u64) -> ModelPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = BTreeMap::new();
    for group in model_param_groups(g) {
        let hi = (1000 / group.len() as i64).max(1);
        let weights: Vec<i64> = group.iter().map(|_| rng.gen_range(1..=hi)).collect();
        let total: i64 = weights.iter().sum();
        for (id, w) in group.into_iter().zip(weights) {
            values.insert(id, Rational::new(w, total));
        }
    }
    ModelPoint { values }
}

/// A probability: exact, or a decimal estimate.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rational),
    Approx(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64(),
            Value::Approx(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Approx(x) => write!(f, "{x:e}"),
        }
    }
}

/// One interventional distribution over its free variables.
///
/// Every assignment of the free variables has an entry; zeros are explicit.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTable {
    pub request: DistributionRequest,
    pub entries: BTreeMap<Assignment, Value>,
}

impl DistributionTable {
    pub fn is_exact(&self) -> bool {
        self.entries.values().all(Value::is_exact)
    }

    pub fn get(&self, v: &Assignment) -> Option<&Value> {
        self.entries.get(v)
    }

    /// Sum of the entries; exact when the table is.
    pub fn total(&self) -> Value {
        if self.is_exact() {
            Value::Exact(
                self.entries
                    .values()
                    .map(|x| match x {
                        Value::Exact(r) => r.clone(),
                        Value::Approx(_) => unreachable!(),
                    })
                    .sum(),
            )
        } else {
            Value::Approx(self.entries.values().map(Value::to_f64).sum())
        }
    }

    /// Checks coverage, nonnegativity and normalization (exact, or within
    /// `tol` for decimal tables).
    pub fn validate(&self, g: &CausalGraph, tol: f64) -> Result<(), VerifyError> {
        let request = self.request.to_string();
        let expected = g.assignments(&free_variables(g, &self.request.t))?;
        for v in &expected {
            if !self.entries.contains_key(v) {
                return Err(VerifyError::IncompleteTable { request, entry: v.to_string() });
            }
        }
        if self.entries.len() != expected.len() {
            let extra = self.entries.keys().find(|k| !expected.contains(k)).unwrap();
            return Err(VerifyError::UnexpectedEntry { request, entry: extra.to_string() });
        }
        if self.entries.values().any(|x| x.to_f64() < 0.0) {
            return Err(VerifyError::InvalidTable { request, reason: "negative entry".into() });
        }
        let ok = match self.total() {
            Value::Exact(r) => r.is_one(),
            Value::Approx(x) => (x - 1.0).abs() <= tol,
        };
        if !ok {
            return Err(VerifyError::InvalidTable { request, reason: format!("entries sum to {}", self.total()) });
        }
        Ok(())
    }
}

/// `P_t(v)` by the truncated factorization, summing over every hidden
/// assignment.
pub fn exact_distribution(
    g: &CausalGraph,
    point: &ModelPoint,
    t: &Assignment,
) -> Result<DistributionTable, VerifyError> {
    let t = g.canonical_assignment(t)?;
    if t.len() == g.observed().count() {
        return Err(ParamError::FullIntervention(t.to_string()).into());
    }
    let free = free_variables(g, &t);
    let hidden = g.hidden_names();
    let lookup = |id: ParamId| point.get(&id).cloned().ok_or_else(|| VerifyError::MissingModelParam(id.to_string()));
    let mut entries = BTreeMap::new();
    for v in g.assignments(&free)? {
        let mut total = Rational::zero();
        for u in g.assignments(&hidden)? {
            let value_of = |n: &str| t.get(n).or_else(|| v.get(n)).or_else(|| u.get(n)).expect("assigned");
            let mut term = Rational::one();
            for x in &free {
                let pick = |names: Vec<crate::model::VarName>| {
                    Assignment::from_pairs(names.into_iter().map(|n| {
                        let val = value_of(&n);
                        (n, val)
                    }))
                };
                let id = ParamId::ModelQ {
                    var: x.clone(),
                    value: value_of(x),
                    parents: pick(g.parents(x)),
                    hidden: pick(g.hidden_parents(x)),
                };
                term = &term * &lookup(id)?;
            }
            for (n, val) in u.iter() {
                term = &term * &lookup(ParamId::ModelR { var: n.clone(), value: val })?;
            }
            total = &total + &term;
        }
        entries.insert(v, Value::Exact(total));
    }
    Ok(DistributionTable { request: DistributionRequest::new(t), entries })
}

/// Tables indexed by request for parameter lookup.
pub struct TableSet<'a> {
    by_request: BTreeMap<&'a Assignment, &'a DistributionTable>,
}

impl<'a> TableSet<'a> {
    pub fn new(tables: &'a [DistributionTable]) -> Result<Self, VerifyError> {
        let mut by_request = BTreeMap::new();
        for tb in tables {
            if by_request.insert(&tb.request.t, tb).is_some() {
                return Err(VerifyError::DuplicateTable(tb.request.to_string()));
            }
        }
        Ok(TableSet { by_request })
    }

    pub fn value(&self, id: &ParamId) -> Result<&'a Value, VerifyError> {
        let missing = || VerifyError::MissingEntry(id.to_string());
        let ParamId::JointSpace { t, v } = id else { return Err(missing()) };
        self.by_request.get(t).and_then(|tb| tb.get(v)).ok_or_else(missing)
    }

    pub fn is_exact(&self) -> bool {
        self.by_request.values().all(|t| t.is_exact())
    }
}

/// Value of `f` with every joint-space parameter read from `tables`;
/// exact when every table used is exact.
pub fn evaluate(f: &Polynomial<ParamId>, tables: &[DistributionTable]) -> Result<Value, VerifyError> {
    evaluate_in(f, &TableSet::new(tables)?)
}

fn evaluate_in(f: &Polynomial<ParamId>, tables: &TableSet<'_>) -> Result<Value, VerifyError> {
    let mut exact = true;
    for id in f.variables() {
        exact &= tables.value(&id)?.is_exact();
    }
    if exact {
        f.eval_with(|id| match tables.value(id)? {
            Value::Exact(r) => Ok(r.clone()),
            Value::Approx(_) => unreachable!(),
        })
        .map(Value::Exact)
    } else {
        f.eval_f64_with(|id| tables.value(id).map(Value::to_f64)).map(Value::Approx)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GeneratorResult {
    pub index: usize,
    pub generator: String,
    pub value: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckReport {
    pub exact: bool,
    pub tolerance: f64,
    pub results: Vec<GeneratorResult>,
    pub passed: usize,
    pub failed: usize,
    /// Set when the constraint set is empty, so the pass is vacuous.
    pub no_constraints: bool,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.results {
            let mark = if r.pass { "pass" } else { "FAIL" };
            s.push_str(&format!("{mark} #{} value={} : {}\n", r.index, r.value, r.generator));
        }
        if self.no_constraints {
            s.push_str("no constraints: vacuous pass\n");
        }
        let mode = if self.exact { "exact".to_string() } else { format!("tolerance {:e}", self.tolerance) };
        s.push_str(&format!("{} passed, {} failed ({mode})\n", self.passed, self.failed));
        s
    }
}

/// Evaluates every generator on `tables`. With exact tables the tolerance
/// is zero regardless of `tol`.
pub fn check(constraints: &ConstraintSet, tables: &[DistributionTable], tol: f64) -> Result<CheckReport, VerifyError> {
    let set = TableSet::new(tables)?;
    let exact = set.is_exact();
    let tolerance = if exact { 0.0 } else { tol };
    let mut results = Vec::new();
    for (index, f) in constraints.generators().iter().enumerate() {
        let value = evaluate_in(f, &set)?;
        let pass = match &value {
            Value::Exact(r) => r.is_zero(),
            Value::Approx(x) => x.abs() <= tolerance,
        };
        results.push(GeneratorResult {
            index,
            generator: f.to_string_with(&MonomialOrder::GrevLex),
            value: value.to_string(),
            pass,
        });
    }
    let passed = results.iter().filter(|r| r.pass).count();
    Ok(CheckReport {
        exact,
        tolerance,
        failed: results.len() - passed,
        passed,
        no_constraints: results.is_empty(),
        results,
    })
}

/// Whether `candidate` lies in the ideal of `constraints`.
pub fn member(candidate: &Polynomial<ParamId>, constraints: &ConstraintSet, budget: &Budget) -> Result<bool, VerifyError> {
    Ok(constraints.ideal.contains(candidate, &MonomialOrder::GrevLex, budget)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_direct;
    use crate::parameterize::{all_requests, image_polynomial, request_params};

    fn common_cause() -> CausalGraph {
        "obs V1 2\nobs V2 2\nobs V3 2\nedge V3 V1\nedge V3 V2\n".parse().unwrap()
    }

    fn fork() -> CausalGraph {
        "obs A 2\nobs B 2\nhidden U\nedge U A\nedge U B\n".parse().unwrap()
    }

    fn a(s: &str) -> Assignment {
        s.parse().unwrap()
    }

    fn uniform(g: &CausalGraph) -> ModelPoint {
        let mut values = BTreeMap::new();
        for group in model_param_groups(g) {
            let n = group.len() as i64;
            for id in group {
                values.insert(id, Rational::new(1, n));
            }
        }
        ModelPoint { values }
    }

    #[test]
    fn random_models_are_valid_and_seeded() {
        for g in [common_cause(), fork()] {
            let m = random_model(&g, 7);
            m.validate(&g).unwrap();
            assert_eq!(m, random_model(&g, 7));
            assert_ne!(m, random_model(&g, 8));
            assert!(m.values.values().all(|x| !x.is_zero() && x.denom() <= 1000.into()));
        }
    }

    #[test]
    fn uniform_model_gives_uniform_table() {
        let g = common_cause();
        let tb = exact_distribution(&g, &uniform(&g), &Assignment::empty()).unwrap();
        assert!(tb.entries.values().all(|x| *x == Value::Exact(Rational::new(1, 8))));
    }

    #[test]
    fn chain_intervention_leaves_one_conditional() {
        let g: CausalGraph = "obs V1 3\nobs V2 2\nedge V2 V1\n".parse().unwrap();
        let m = random_model(&g, 3);
        let tb = exact_distribution(&g, &m, &a("V2=2")).unwrap();
        for (v, x) in &tb.entries {
            let id: ParamId = format!("q[V1={}|V2=2]", v.get("V1").unwrap()).parse().unwrap();
            assert_eq!(*x, Value::Exact(m.get(&id).unwrap().clone()));
        }
    }

    #[test]
    fn hidden_mixture_of_deterministic_children() {
        let g = fork();
        let mut m = uniform(&g);
        let set = |m: &mut ModelPoint, s: &str, x: Rational| {
            m.values.insert(s.parse().unwrap(), x);
        };
        // A and B copy U.
        for child in ["A", "B"] {
            for u in 1..=2 {
                for val in 1..=2 {
                    let x = if u == val { Rational::one() } else { Rational::zero() };
                    set(&mut m, &format!("q[{child}={val}|;U={u}]"), x);
                }
            }
        }
        set(&mut m, "r[U=1]", Rational::new(1, 3));
        set(&mut m, "r[U=2]", Rational::new(2, 3));
        let tb = exact_distribution(&g, &m, &Assignment::empty()).unwrap();
        assert_eq!(tb.get(&a("A=1,B=1")), Some(&Value::Exact(Rational::new(1, 3))));
        assert_eq!(tb.get(&a("A=2,B=2")), Some(&Value::Exact(Rational::new(2, 3))));
        assert_eq!(tb.get(&a("A=1,B=2")), Some(&Value::Exact(Rational::zero())));
    }

    #[test]
    fn tables_agree_with_images_and_normalize() {
        for g in [common_cause(), fork()] {
            let m = random_model(&g, 11);
            for r in all_requests(&g) {
                let tb = exact_distribution(&g, &m, &r.t).unwrap();
                tb.validate(&g, 0.0).unwrap();
                for id in request_params(&g, &r) {
                    let image = image_polynomial(&g, &id).unwrap();
                    let direct = image.eval_with(|q| m.get(q).cloned().ok_or(())).unwrap();
                    let ParamId::JointSpace { v, .. } = &id else { unreachable!() };
                    assert_eq!(tb.get(v), Some(&Value::Exact(direct)));
                }
            }
        }
    }

    #[test]
    fn check_passes_model_data_and_catches_perturbation() {
        let g = common_cause();
        let b = Budget::default();
        let k = kernel_direct(&g, &[DistributionRequest::observational()], &b).unwrap();
        let m = random_model(&g, 5);
        let tb = exact_distribution(&g, &m, &Assignment::empty()).unwrap();
        let report = check(&k, std::slice::from_ref(&tb), 1e-6).unwrap();
        assert!(report.all_pass() && report.exact && !report.no_constraints);

        let mut noisy = tb.clone();
        let keys: Vec<Assignment> = noisy.entries.keys().cloned().collect();
        for (i, key) in keys.iter().enumerate() {
            let x = noisy.entries[key].to_f64() + if i == 0 { 1e-3 } else { 0.0 };
            noisy.entries.insert(key.clone(), Value::Approx(x / (1.0 + 1e-3)));
        }
        let report = check(&k, &[noisy], 1e-6).unwrap();
        assert!(!report.all_pass());

        let empty = ConstraintSet { ideal: crate::ring::Ideal::zero(), ..k.clone() };
        assert!(check(&empty, &[tb], 0.0).unwrap().no_constraints);
    }

    #[test]
    fn evaluation_details() {
        let g = common_cause();
        let m = random_model(&g, 1);
        let tb = exact_distribution(&g, &m, &Assignment::empty()).unwrap();
        assert_eq!(evaluate(&Polynomial::zero(), &[]).unwrap(), Value::Exact(Rational::zero()));
        let f: Polynomial<ParamId> = "p[|V1=1,V2=1,V3=1] + p[|V1=2,V2=1,V3=1]".parse().unwrap();
        let g2: Polynomial<ParamId> = "p[|V1=1,V2=2,V3=1]".parse().unwrap();
        let sum = evaluate(&(&f + &g2), std::slice::from_ref(&tb)).unwrap();
        let (Value::Exact(x), Value::Exact(y)) = (evaluate(&f, std::slice::from_ref(&tb)).unwrap(), evaluate(&g2, std::slice::from_ref(&tb)).unwrap()) else {
            panic!()
        };
        assert_eq!(sum, Value::Exact(&x + &y));
        let missing: Polynomial<ParamId> = "p[V3=1|V1=1,V2=1]".parse().unwrap();
        assert!(matches!(evaluate(&missing, &[tb]), Err(VerifyError::MissingEntry(_))));
    }

    #[test]
    fn xor_table_violates_independence() {
        let g = common_cause();
        let b = Budget::default();
        let k = kernel_direct(&g, &[DistributionRequest::observational()], &b).unwrap();
        let mut entries = BTreeMap::new();
        for v in g.assignments(&g.observed_names()).unwrap() {
            let same = v.get("V1") == v.get("V2");
            entries.insert(v, Value::Exact(if same { Rational::new(1, 4) } else { Rational::zero() }));
        }
        let tb = DistributionTable { request: DistributionRequest::observational(), entries };
        tb.validate(&g, 0.0).unwrap();
        let report = check(&k, &[tb], 0.0).unwrap();
        assert!(!report.all_pass());
    }

    #[test]
    fn membership() {
        let g = common_cause();
        let b = Budget::default();
        let k = kernel_direct(&g, &[DistributionRequest::observational()], &b).unwrap();
        for f in k.generators() {
            assert!(member(f, &k, &b).unwrap());
        }
        let linear: Polynomial<ParamId> = "p[|V1=1,V2=1,V3=1] - 2*p[|V1=2,V2=1,V3=2]".parse().unwrap();
        assert!(!member(&linear, &k, &b).unwrap());
    }
}
