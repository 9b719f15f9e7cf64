use std::collections::HashMap;

use crate::model::{Assignment, CausalGraph, GraphError, IndependenceStatement};
use crate::parameterize::{free_variables, ParamId};

use super::{Ideal, Polynomial};

/// The 2×2 minors expressing `a ⊥ b | c` in `P_t`: for every `c` and every
/// pair of values `a < a'`, `b < b'`,
/// `P(a,b,c)·P(a',b',c) − P(a',b,c)·P(a,b',c)`, each `P(…)` being the sum of
/// `p^t_v` over the variables the statement does not mention.
pub fn independence_ideal(
    stmt: &IndependenceStatement,
    g: &CausalGraph,
    t: &Assignment,
) -> Result<Ideal<ParamId>, GraphError> {
    let t = g.canonical_assignment(t)?;
    let free = free_variables(g, &t);
    for n in std::iter::once(&stmt.a).chain(&stmt.b).chain(&stmt.c) {
        if !free.contains(n) {
            return Err(g.variable(n).map_or(GraphError::Unknown(n.to_string()), |_| GraphError::NotObserved(n.to_string())));
        }
    }
    // Marginal table over (a, b, c).
    let mut marginal: HashMap<(u32, Assignment, Assignment), Vec<ParamId>> = HashMap::new();
    for v in g.assignments(&free)? {
        let a = v.get(&stmt.a).unwrap();
        let b = v.restrict(|n| stmt.b.iter().any(|x| &**x == n));
        let c = v.restrict(|n| stmt.c.iter().any(|x| &**x == n));
        marginal.entry((a, b, c)).or_default().push(ParamId::joint(t.clone(), v));
    }
    let cell = |a: u32, b: &Assignment, c: &Assignment| Polynomial::sum_of(marginal[&(a, b.clone(), c.clone())].clone());
    let card_a = g.cardinality(&stmt.a).unwrap();
    let bs = g.assignments(&stmt.b)?;
    let mut gens = Vec::new();
    for c in g.assignments(&stmt.c)? {
        for a in 1..=card_a {
            for a2 in a + 1..=card_a {
                for (k, b) in bs.iter().enumerate() {
                    for b2 in &bs[k + 1..] {
                        gens.push(&cell(a, b, &c) * &cell(a2, b2, &c) - &cell(a2, b, &c) * &cell(a, b2, &c));
                    }
                }
            }
        }
    }
    Ok(Ideal::new(gens))
}
