use std::collections::HashMap;

use super::{is_identifier, CausalGraph, GraphError, VarKind, Variable};

fn syntax(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Syntax { line, message: message.into() }
}

/// Parses the line-based graph format:
///
/// ```text
/// # comment
/// obs NAME CARD
/// hidden NAME [CARD]     # cardinality defaults to 2
/// edge PARENT CHILD
/// ```
pub fn parse_graph(text: &str) -> Result<CausalGraph, GraphError> {
    let mut vars: Vec<Variable> = Vec::new();
    let mut kinds: HashMap<String, VarKind> = HashMap::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        match words[0] {
            "obs" | "hidden" => {
                let kind = if words[0] == "obs" { VarKind::Observed } else { VarKind::Hidden };
                let arity_ok = match kind {
                    VarKind::Observed => words.len() == 3,
                    VarKind::Hidden => words.len() == 2 || words.len() == 3,
                };
                if !arity_ok {
                    return Err(syntax(line, format!("expected `{} NAME CARD`", words[0])));
                }
                let name = words[1];
                if !is_identifier(name) {
                    return Err(syntax(line, format!("invalid variable name `{name}`")));
                }
                if kinds.contains_key(name) {
                    return Err(syntax(line, format!("duplicate variable `{name}`")));
                }
                let cardinality = match words.get(2) {
                    Some(c) => c.parse::<u32>().map_err(|_| syntax(line, format!("invalid cardinality `{c}`")))?,
                    None => 2,
                };
                if cardinality < 2 {
                    return Err(syntax(line, format!("cardinality of `{name}` must be at least 2")));
                }
                kinds.insert(name.to_string(), kind);
                vars.push(Variable { name: name.into(), cardinality, kind });
            }
            "edge" => {
                if words.len() != 3 {
                    return Err(syntax(line, "expected `edge PARENT CHILD`"));
                }
                let (p, c) = (words[1], words[2]);
                for n in [p, c] {
                    if !kinds.contains_key(n) {
                        return Err(syntax(line, format!("unknown variable `{n}`")));
                    }
                }
                if kinds[c] == VarKind::Hidden {
                    return Err(syntax(line, format!("hidden variable `{c}` cannot have a parent")));
                }
                edges.push((p.to_string(), c.to_string()));
            }
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        }
    }
    CausalGraph::from_parts(vars, edges)
}
