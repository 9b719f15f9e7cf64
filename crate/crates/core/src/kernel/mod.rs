//! Kernels of the parameterization: the polynomial constraints a causal
//! model imposes on a set of interventional distributions.
//!
//! [`kernel_direct`] eliminates the model parameters from the mapping
//! ideal and works for any graph. [`kernel_two_step`] goes through the
//! distribution over observed and hidden variables first. The closed forms
//! ([`kernel_prop1`], [`kernel_eq19`], [`kernel_prop2`], [`kernel_lemma1`])
//! apply to fully observed graphs under their stated graph conditions.

mod closed;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Assignment, CausalGraph, GraphError, VarKind, Variable};
use crate::parameterize::{
    canonical_requests, mapping_ideal, model_params, DistributionRequest, ParamError, ParamId,
};
use crate::ring::{Budget, Ideal, MonomialOrder, Polynomial, RingError, TermJson};

pub use closed::{eq19_literal_generators, kernel_eq19, kernel_lemma1, kernel_prop1, kernel_prop2, prop1_saturating_forms};

/// How a constraint set was derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Direct,
    TwoStep,
    Prop1,
    Eq19,
    Prop2,
    Lemma1,
    Reduced,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::TwoStep => "two-step",
            Method::Prop1 => "prop1",
            Method::Eq19 => "eq19",
            Method::Prop2 => "prop2",
            Method::Lemma1 => "lemma1",
            Method::Reduced => "reduced",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl KernelError {
    pub fn is_budget(&self) -> bool {
        matches!(self, KernelError::Ring(RingError::Intractable { .. }))
    }
}

/// Generators of a kernel, over joint-space parameters only, with the
/// derivation's provenance.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    pub method: Method,
    pub graph_digest: String,
    pub requests: Vec<DistributionRequest>,
    /// Free-form remarks on how the set was obtained.
    pub notes: Vec<String>,
    pub ideal: Ideal<ParamId>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ConstraintSetJson {
    pub method: Method,
    pub graph_digest: String,
    pub requests: Vec<DistributionRequest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub generators: Vec<Vec<TermJson<ParamId>>>,
}

impl ConstraintSet {
    pub(crate) fn new(
        method: Method,
        g: &CausalGraph,
        requests: Vec<DistributionRequest>,
        generators: Vec<Polynomial<ParamId>>,
    ) -> Self {
        let ideal = Ideal::new(generators);
        debug_assert!(ideal.variables().iter().all(ParamId::is_joint_space));
        ConstraintSet { method, graph_digest: g.digest(), requests, notes: Vec::new(), ideal }
    }

    pub fn generators(&self) -> &[Polynomial<ParamId>] {
        self.ideal.generators()
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Whether the ideals agree, compared by reduced GrevLex bases.
    pub fn same_ideal(&self, other: &ConstraintSet, budget: &Budget) -> Result<bool, RingError> {
        self.ideal.equals(&other.ideal, &MonomialOrder::GrevLex, budget)
    }

    pub fn to_json(&self) -> ConstraintSetJson {
        ConstraintSetJson {
            method: self.method,
            graph_digest: self.graph_digest.clone(),
            requests: self.requests.clone(),
            notes: self.notes.clone(),
            generators: self.generators().iter().map(|f| f.to_json_terms(&MonomialOrder::GrevLex)).collect(),
        }
    }

    pub fn from_json(json: ConstraintSetJson) -> Self {
        ConstraintSet {
            method: json.method,
            graph_digest: json.graph_digest,
            requests: json.requests,
            notes: json.notes,
            ideal: Ideal::new(json.generators.into_iter().map(Polynomial::from_json_terms)),
        }
    }

    /// One generator per line, in the canonical text form.
    pub fn to_text(&self) -> String {
        let mut s = format!("# method: {}\n# graph: {}\n", self.method, self.graph_digest);
        let reqs: Vec<String> = self.requests.iter().map(|r| format!("[{r}]")).collect();
        s.push_str(&format!("# requests: {}\n", reqs.join(" ")));
        for n in &self.notes {
            s.push_str(&format!("# note: {n}\n"));
        }
        for f in self.generators() {
            s.push_str(&f.to_string_with(&MonomialOrder::GrevLex));
            s.push('\n');
        }
        s
    }
}

/// The mapping ideal with every model parameter eliminated.
pub fn kernel_direct(
    g: &CausalGraph,
    requests: &[DistributionRequest],
    budget: &Budget,
) -> Result<ConstraintSet, KernelError> {
    let requests = canonical_requests(g, requests)?;
    let ideal = mapping_ideal(g, &requests)?;
    let drop: BTreeSet<ParamId> = model_params(g).into_iter().collect();
    let kernel = ideal.eliminate(&drop, budget)?;
    Ok(ConstraintSet::new(Method::Direct, g, requests, kernel.into_generators()))
}

/// `g` with every hidden variable declared observed.
fn all_observed(g: &CausalGraph) -> Result<CausalGraph, GraphError> {
    let vars: Vec<Variable> =
        g.variables().iter().map(|v| Variable { kind: VarKind::Observed, ..v.clone() }).collect();
    CausalGraph::from_parts(vars, g.edges())
}

/// Kernel for a graph with hidden variables, computed in two steps: first
/// the kernel for the distributions over observed and hidden variables
/// together, then the marginalization `p^t_v = Σ_u p^t_{vu}` with the
/// extended parameters eliminated.
pub fn kernel_two_step(
    g: &CausalGraph,
    requests: &[DistributionRequest],
    budget: &Budget,
) -> Result<ConstraintSet, KernelError> {
    if !g.has_hidden() {
        return Err(KernelError::Precondition("the two-step method needs a hidden variable".into()));
    }
    let requests = canonical_requests(g, requests)?;
    let ext = all_observed(g)?;
    let step1 = kernel_direct(&ext, &requests, budget)?;
    let hidden = g.hidden_names();
    let mut gens: Vec<Polynomial<ParamId>> = step1.ideal.into_generators();
    let mut drop = BTreeSet::new();
    for r in &requests {
        let free = crate::parameterize::free_variables(g, &r.t);
        for v in g.assignments(&free)? {
            let extended: Vec<ParamId> = g
                .assignments(&hidden)?
                .into_iter()
                .map(|u| ParamId::joint(r.t.clone(), merge_declared(g, &v, &u)))
                .collect();
            drop.extend(extended.iter().cloned());
            gens.push(Polynomial::var(ParamId::joint(r.t.clone(), v)) - Polynomial::sum_of(extended));
        }
    }
    let kernel = Ideal::new(gens).eliminate(&drop, budget)?;
    Ok(ConstraintSet::new(Method::TwoStep, g, requests, kernel.into_generators()))
}

/// Union of two assignments over disjoint variables, in declaration order.
fn merge_declared(g: &CausalGraph, a: &Assignment, b: &Assignment) -> Assignment {
    let mut pairs: Vec<_> = a.pairs().iter().chain(b.pairs()).cloned().collect();
    pairs.sort_by_key(|(n, _)| g.position(n));
    Assignment::from_pairs(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(s: &str) -> CausalGraph {
        s.parse().unwrap()
    }

    fn req(s: &str) -> DistributionRequest {
        s.parse().unwrap()
    }

    fn poly(s: &str) -> Polynomial<ParamId> {
        s.parse().unwrap()
    }

    #[test]
    fn single_variable() {
        let g = graph("obs A 2\n");
        let k = kernel_direct(&g, &[req("")], &Budget::default()).unwrap();
        assert_eq!(k.generators(), &[poly("p[|A=1] + p[|A=2] - 1")]);
    }

    #[test]
    fn saturated_two_variable_model() {
        let g = graph("obs V1 2\nobs V2 2\nedge V2 V1\n");
        let k = kernel_direct(&g, &[req("")], &Budget::default()).unwrap();
        assert_eq!(k.generators(), &[poly("p[|V1=1,V2=1] + p[|V1=1,V2=2] + p[|V1=2,V2=1] + p[|V1=2,V2=2] - 1")]);
    }

    #[test]
    fn two_step_matches_direct_on_a_fork() {
        let b = Budget::default();
        let g = graph("obs A 2\nobs B 2\nhidden U\nedge U A\nedge U B\n");
        let direct = kernel_direct(&g, &[req("")], &b).unwrap();
        let two = kernel_two_step(&g, &[req("")], &b).unwrap();
        assert!(direct.same_ideal(&two, &b).unwrap());
    }

    #[test]
    fn single_child_hidden_variable_is_invisible() {
        let b = Budget::default();
        let with_u = graph("obs A 2\nobs B 2\nhidden U\nedge U A\nedge A B\n");
        let without = graph("obs A 2\nobs B 2\nedge A B\n");
        let rs = [req(""), req("A=1")];
        let k1 = kernel_two_step(&with_u, &rs, &b).unwrap();
        let k2 = kernel_direct(&without, &rs, &b).unwrap();
        assert!(k1.same_ideal(&k2, &b).unwrap());
        let disconnected = graph("obs A 2\nobs B 2\nhidden U\nedge A B\n");
        let k3 = kernel_direct(&disconnected, &rs, &b).unwrap();
        assert!(k3.same_ideal(&k2, &b).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let g = graph("obs V1 2\nobs V2 2\nobs V3 2\nedge V3 V1\nedge V3 V2\n");
        let k = kernel_direct(&g, &[req("")], &Budget::default()).unwrap();
        let json = serde_json::to_string(&k.to_json()).unwrap();
        let back = ConstraintSet::from_json(serde_json::from_str(&json).unwrap());
        assert_eq!(back.generators(), k.generators());
        assert_eq!(back.method, Method::Direct);
        assert!(k.to_text().contains("# method: direct"));
    }

    #[test]
    fn two_step_rejects_observed_graphs() {
        let g = graph("obs A 2\n");
        assert!(matches!(kernel_two_step(&g, &[req("")], &Budget::default()), Err(KernelError::Precondition(_))));
    }
}
