//! Shrinking the implicitization problem with known relations between
//! interventional distributions: c-component products and ancestral-set
//! sums.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::kernel::{kernel_direct, ConstraintSet, KernelError, Method};
use crate::model::{Assignment, CausalGraph, GraphError, VarName};
use crate::parameterize::{
    canonical_requests, free_variables, relevant_hidden, request_params, DistributionRequest, ParamId,
};
use crate::ring::{Budget, Ideal, MonomialOrder, Polynomial, TermJson};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    CComponentProduct,
    AncestralSum,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::CComponentProduct => "c-component-product",
            Rule::AncestralSum => "ancestral-sum",
        })
    }
}

/// One family removed from the problem, with the families it was
/// expressed through.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub family: DistributionRequest,
    pub rule: Rule,
    pub witness: Vec<DistributionRequest>,
}

/// Output of [`poly_relations`].
#[derive(Clone, Debug)]
pub struct RelationLedger {
    /// Families added because a product relation refers to them.
    pub added: Vec<DistributionRequest>,
    /// Families left after the product rule.
    pub after_products: Vec<DistributionRequest>,
    /// Families left after both rules.
    pub residual: Vec<DistributionRequest>,
    pub relations: Vec<Polynomial<ParamId>>,
    pub steps: Vec<Step>,
    /// Joint-space parameters of the requested families.
    pub parameter_count: usize,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct LedgerJson {
    pub parameter_count: usize,
    pub added: Vec<DistributionRequest>,
    pub after_products: Vec<DistributionRequest>,
    pub residual: Vec<DistributionRequest>,
    pub relations: Vec<Vec<TermJson<ParamId>>>,
    pub steps: Vec<Step>,
}

impl RelationLedger {
    pub fn to_json(&self) -> LedgerJson {
        LedgerJson {
            parameter_count: self.parameter_count,
            added: self.added.clone(),
            after_products: self.after_products.clone(),
            residual: self.residual.clone(),
            relations: self.relations.iter().map(|f| f.to_json_terms(&MonomialOrder::GrevLex)).collect(),
            steps: self.steps.clone(),
        }
    }
}

/// `P_t(v) = ∏_i P_{v∖h_i}(v)` over the c-components `H_i` of `G(V∖T)`,
/// one generator per `v`; `None` when there is a single component.
pub fn lemma2_relation(g: &CausalGraph, t: &Assignment) -> Result<Option<Vec<Polynomial<ParamId>>>, KernelError> {
    let t = g.canonical_assignment(t)?;
    Ok(product_witnesses(g, &t)?.map(|(_, gens)| gens))
}

fn product_witnesses(
    g: &CausalGraph,
    t: &Assignment,
) -> Result<Option<(Vec<DistributionRequest>, Vec<Polynomial<ParamId>>)>, GraphError> {
    let free = free_variables(g, t);
    let comps = g.induced_subgraph(&free)?.c_components();
    if comps.len() < 2 {
        return Ok(None);
    }
    let mut witnesses = BTreeSet::new();
    let mut gens = Vec::new();
    for v in g.assignments(&free)? {
        let full = g.cons(&v, t);
        let factors: Vec<ParamId> = comps
            .iter()
            .map(|h| {
                let outside = full.restrict(|n| !h.iter().any(|x| &**x == n));
                let inside = full.restrict(|n| h.iter().any(|x| &**x == n));
                witnesses.insert(DistributionRequest::new(outside.clone()));
                ParamId::joint(outside, inside)
            })
            .collect();
        gens.push(Polynomial::var(ParamId::joint(t.clone(), v)) - Polynomial::product_of(factors));
    }
    Ok(Some((witnesses.into_iter().collect(), gens)))
}

/// Whether `P_t` is a marginal of `P_c`: `C ⊊ T`, `c = t|C`, and `V∖T`
/// ancestral in `G(V∖C)`.
pub fn lemma3_applies(g: &CausalGraph, t: &Assignment, c: &Assignment) -> Result<bool, GraphError> {
    if c.len() >= t.len() || !c.iter().all(|(n, v)| t.get(n) == Some(v)) {
        return Ok(false);
    }
    let sub = g.induced_subgraph(&free_variables(g, c))?;
    sub.is_ancestral(&free_variables(g, t))
}

/// `p^t_v − Σ_{T∖C} p^c_v` for every `v`.
pub fn lemma3_generators(g: &CausalGraph, t: &Assignment, c: &Assignment) -> Result<Vec<Polynomial<ParamId>>, GraphError> {
    let free_t = free_variables(g, t);
    let summed: Vec<VarName> = t.names().filter(|n| !c.contains(n)).cloned().collect();
    let mut gens = Vec::new();
    for v in g.assignments(&free_t)? {
        let terms = g.assignments(&summed)?.into_iter().map(|s| {
            let w = g.cons(&v, &s).restrict(|n| !c.contains(n));
            ParamId::joint(c.clone(), w)
        });
        gens.push(Polynomial::var(ParamId::joint(t.clone(), v.clone())) - Polynomial::sum_of(terms));
    }
    Ok(gens)
}

/// The ancestral-sum relation for `t` against the first applicable
/// candidate (fewest intervened variables, then canonical order).
pub fn lemma3_relation(
    g: &CausalGraph,
    t: &Assignment,
    candidates: &[DistributionRequest],
) -> Result<Option<(DistributionRequest, Vec<Polynomial<ParamId>>)>, KernelError> {
    let t = g.canonical_assignment(t)?;
    let mut sorted: Vec<&DistributionRequest> = candidates.iter().collect();
    sorted.sort_by(|a, b| a.t.len().cmp(&b.t.len()).then_with(|| a.cmp(b)));
    for c in sorted {
        let c_t = g.canonical_assignment(&c.t)?;
        if lemma3_applies(g, &t, &c_t)? {
            return Ok(Some((DistributionRequest::new(c_t.clone()), lemma3_generators(g, &t, &c_t)?)));
        }
    }
    Ok(None)
}

/// Relation generators for one audit step, rebuilt from the graph.
pub fn replay_step(g: &CausalGraph, step: &Step) -> Result<Vec<Polynomial<ParamId>>, KernelError> {
    match step.rule {
        Rule::CComponentProduct => Ok(product_witnesses(g, &step.family.t)?.map(|x| x.1).unwrap_or_default()),
        Rule::AncestralSum => Ok(lemma3_generators(g, &step.family.t, &step.witness[0].t)?),
    }
}

/// Runs the product rule on every requested family and then the sum rule
/// on what is left.
pub fn poly_relations(g: &CausalGraph, requests: &[DistributionRequest]) -> Result<RelationLedger, KernelError> {
    let requests = canonical_requests(g, requests)?;
    let parameter_count = requests.iter().map(|r| request_params(g, r).len()).sum();
    let mut relations = Vec::new();
    let mut steps = Vec::new();
    let mut removed = BTreeSet::new();
    let mut referenced = BTreeSet::new();
    for r in &requests {
        if let Some((witness, gens)) = product_witnesses(g, &r.t)? {
            referenced.extend(witness.iter().cloned());
            relations.extend(gens);
            removed.insert(r.clone());
            steps.push(Step { family: r.clone(), rule: Rule::CComponentProduct, witness });
        }
    }
    let known: BTreeSet<&DistributionRequest> = requests.iter().collect();
    let added: Vec<DistributionRequest> = referenced.iter().filter(|r| !known.contains(r)).cloned().collect();
    let mut residual: Vec<DistributionRequest> =
        requests.iter().chain(&added).filter(|r| !removed.contains(*r)).cloned().collect();
    residual.sort();
    let after_products = residual.clone();

    let mut current: BTreeSet<DistributionRequest> = residual.iter().cloned().collect();
    for r in &residual {
        let others: Vec<DistributionRequest> = current.iter().filter(|c| *c != r).cloned().collect();
        if let Some((witness, gens)) = lemma3_relation(g, &r.t, &others)? {
            relations.extend(gens);
            current.remove(r);
            steps.push(Step { family: r.clone(), rule: Rule::AncestralSum, witness: vec![witness] });
        }
    }
    Ok(RelationLedger {
        added,
        after_products,
        residual: current.into_iter().collect(),
        relations,
        steps,
        parameter_count,
    })
}

/// Groups families whose parameterizations share a model parameter: a
/// free observed variable, or a hidden variable with a free child.
pub fn independent_groups(g: &CausalGraph, families: &[DistributionRequest]) -> Vec<Vec<DistributionRequest>> {
    let touched: Vec<BTreeSet<VarName>> = families
        .iter()
        .map(|r| {
            let free = free_variables(g, &r.t);
            let mut s: BTreeSet<VarName> = relevant_hidden(g, &free).into_iter().collect();
            s.extend(free);
            s
        })
        .collect();
    let mut group_of: Vec<usize> = (0..families.len()).collect();
    for i in 0..families.len() {
        for j in 0..i {
            if !touched[i].is_disjoint(&touched[j]) {
                let (a, b) = (group_of[i], group_of[j]);
                let (lo, hi) = (a.min(b), a.max(b));
                for x in group_of.iter_mut() {
                    if *x == hi {
                        *x = lo;
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<DistributionRequest>> = BTreeMap::new();
    for (i, r) in families.iter().enumerate() {
        groups.entry(group_of[i]).or_default().push(r.clone());
    }
    groups.into_values().collect()
}

/// The kernel assembled from the relation ideal and independent direct
/// eliminations over the residual families.
pub fn reduced_kernel(
    g: &CausalGraph,
    requests: &[DistributionRequest],
    budget: &Budget,
) -> Result<ConstraintSet, KernelError> {
    let requests = canonical_requests(g, requests)?;
    let ledger = poly_relations(g, &requests)?;
    let mut gens = ledger.relations.clone();
    let groups = independent_groups(g, &ledger.residual);
    let group_count = groups.len();
    for group in groups {
        gens.extend(kernel_direct(g, &group, budget)?.ideal.into_generators());
    }
    let mut notes = vec![format!(
        "{} relations, {} residual families in {group_count} independent groups",
        ledger.relations.len(),
        ledger.residual.len()
    )];
    if !ledger.added.is_empty() {
        let drop: BTreeSet<ParamId> = ledger.added.iter().flat_map(|r| request_params(g, r)).collect();
        gens = Ideal::new(gens).eliminate(&drop, budget)?.into_generators();
        notes.push(format!("{} referenced families eliminated", ledger.added.len()));
    }
    let mut set = ConstraintSet::new(Method::Reduced, g, requests, gens);
    set.notes = notes;
    Ok(set)
}

/// One independent implicitization problem per c-component `C_i`: the
/// family `P_{v∖c_i}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubProblem {
    pub component: Vec<VarName>,
    pub requests: Vec<DistributionRequest>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecomposeError {
    #[error("c-component {{{component}}} contains the edge {parent} -> {child}; use the reduced kernel instead")]
    EdgeInsideComponent { component: String, parent: String, child: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub fn decompose_by_c_components(g: &CausalGraph) -> Result<Vec<SubProblem>, DecomposeError> {
    let comps = g.c_components();
    let mut out = Vec::new();
    for comp in comps {
        for x in &comp {
            if let Some(p) = g.parents(x).into_iter().find(|p| comp.contains(p)) {
                return Err(DecomposeError::EdgeInsideComponent {
                    component: comp.join(","),
                    parent: p.to_string(),
                    child: x.to_string(),
                });
            }
        }
        let outside: Vec<VarName> = g.observed_names().into_iter().filter(|n| !comp.contains(n)).collect();
        let requests = g.assignments(&outside)?.into_iter().map(DistributionRequest::new).collect();
        out.push(SubProblem { component: comp, requests });
    }
    Ok(out)
}
