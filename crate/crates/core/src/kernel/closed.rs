use std::collections::BTreeMap;

use crate::model::{Assignment, CausalGraph, GraphError, VarName};
use crate::parameterize::{
    all_requests, canonical_requests, free_variables, request_params, DistributionRequest, ParamId,
};
use crate::ring::{independence_ideal, Budget, Ideal, Polynomial};

use super::{ConstraintSet, KernelError, Method};

fn require_observed(g: &CausalGraph) -> Result<(), KernelError> {
    if g.has_hidden() {
        return Err(KernelError::Precondition("closed forms need a graph without hidden variables".into()));
    }
    Ok(())
}

fn single_request(g: &CausalGraph, t: &Assignment) -> Result<DistributionRequest, KernelError> {
    Ok(canonical_requests(g, &[DistributionRequest::new(t.clone())])?.remove(0))
}

fn sum_to_one(g: &CausalGraph, r: &DistributionRequest) -> Polynomial<ParamId> {
    Polynomial::sum_of(request_params(g, r)) - Polynomial::one()
}

/// Sum of `p^t_w` over every `w` that agrees with `v` outside `vary`.
fn marginal_form(g: &CausalGraph, t: &Assignment, v: &Assignment, vary: &[VarName]) -> Polynomial<ParamId> {
    let free = free_variables(g, t);
    let params = g
        .assignments(&free)
        .expect("declared")
        .into_iter()
        .filter(|w| w.iter().all(|(n, val)| vary.contains(n) || v.get(n).is_none_or(|x| x == val)))
        .map(|w| ParamId::joint(t.clone(), w));
    Polynomial::sum_of(params)
}

/// The linear forms whose product saturates the local Markov ideal of
/// `G(V∖T)`: with the free variables read sink first, every marginal of
/// `P_t` obtained by summing out a proper prefix, one form per value of
/// the remaining suffix. The empty prefix contributes the parameters
/// themselves.
pub fn prop1_saturating_forms(g: &CausalGraph, t: &Assignment) -> Result<Vec<Polynomial<ParamId>>, KernelError> {
    let t = g.canonical_assignment(t)?;
    let free = free_variables(g, &t);
    let sub = g.induced_subgraph(&free)?;
    let order = sub.sink_first_order();
    let mut forms = Vec::new();
    for k in 0..order.len() {
        let (prefix, suffix) = order.split_at(k);
        for s in g.assignments(suffix)? {
            forms.push(marginal_form(g, &t, &s, prefix));
        }
    }
    Ok(forms)
}

/// Local Markov minors of `G(V∖T)` over the parameters of `P_t`.
pub(crate) fn local_ideal(g: &CausalGraph, t: &Assignment) -> Result<Ideal<ParamId>, KernelError> {
    let free = free_variables(g, t);
    let sub = g.induced_subgraph(&free)?;
    let mut gens = Vec::new();
    for stmt in sub.local_markov()? {
        gens.extend(independence_ideal(&stmt, g, t)?.into_generators());
    }
    Ok(Ideal::new(gens))
}

/// Kernel for the single distribution `P_t` of a fully observed graph: the
/// local Markov ideal of `G(V∖T)` saturated by the marginal linear forms,
/// plus normalization.
pub fn kernel_prop1(g: &CausalGraph, t: &Assignment, budget: &Budget) -> Result<ConstraintSet, KernelError> {
    require_observed(g)?;
    let r = single_request(g, t)?;
    let local = local_ideal(g, &r.t)?;
    let mut gens = if local.generators().is_empty() {
        Vec::new()
    } else {
        let forms = prop1_saturating_forms(g, &r.t)?;
        local.saturate_by_product(&forms, budget)?.into_generators()
    };
    gens.push(sum_to_one(g, &r));
    Ok(ConstraintSet::new(Method::Prop1, g, vec![r], gens))
}

/// For a family with one free variable `V_i` intervened at `t`, the key
/// `(V_i, values of PA_i in t)` that determines its distribution.
fn mechanism_key(g: &CausalGraph, r: &DistributionRequest) -> Option<(VarName, Assignment)> {
    let free = free_variables(g, &r.t);
    let [x] = free.as_slice() else { return None };
    let pa = g.parents(x);
    Some((x.clone(), r.t.restrict(|n| pa.iter().any(|p| &**p == n))))
}

/// `p^t_v − ∏_{i∉T} p^{v∖v_i}_v` for every `(t, v)` with at least two free
/// variables.
pub fn eq19_literal_generators(g: &CausalGraph) -> Result<Vec<Polynomial<ParamId>>, KernelError> {
    require_observed(g)?;
    let mut gens = Vec::new();
    for r in all_requests(g) {
        let free = free_variables(g, &r.t);
        if free.len() < 2 {
            continue;
        }
        for v in g.assignments(&free)? {
            let full = g.cons(&v, &r.t);
            let factors = free.iter().map(|x| {
                let others = full.restrict(|n| n != &**x);
                let own = full.restrict(|n| n == &**x);
                ParamId::joint(others, own)
            });
            gens.push(Polynomial::var(ParamId::joint(r.t.clone(), v.clone())) - Polynomial::product_of(factors));
        }
    }
    Ok(gens)
}

/// Kernel over every interventional distribution of a fully observed
/// graph.
///
/// Besides the product relations of [`eq19_literal_generators`], the
/// single-free-variable families are tied together: each sums to one, and
/// two of them describe the same mechanism whenever they fix the free
/// variable's parents alike.
pub fn kernel_eq19(g: &CausalGraph) -> Result<ConstraintSet, KernelError> {
    let mut gens = eq19_literal_generators(g)?;
    let requests = all_requests(g);
    let mut representative: BTreeMap<(VarName, Assignment), DistributionRequest> = BTreeMap::new();
    for r in &requests {
        let Some(key) = mechanism_key(g, r) else { continue };
        gens.push(sum_to_one(g, r));
        match representative.get(&key) {
            None => {
                representative.insert(key, r.clone());
            }
            Some(rep) => {
                for (a, b) in request_params(g, r).into_iter().zip(request_params(g, rep)) {
                    gens.push(Polynomial::var(a) - Polynomial::var(b));
                }
            }
        }
    }
    Ok(ConstraintSet::new(Method::Eq19, g, requests, gens))
}

/// Kernel for `{P, P_t}` when `V∖T` is ancestral: the observational kernel
/// plus `p^t_v = Σ_t p_v`.
pub fn kernel_prop2(g: &CausalGraph, t: &Assignment, budget: &Budget) -> Result<ConstraintSet, KernelError> {
    require_observed(g)?;
    let r = single_request(g, t)?;
    if r.t.is_empty() {
        return Err(KernelError::Precondition("the intervention must fix at least one variable".into()));
    }
    let free = free_variables(g, &r.t);
    if !g.is_ancestral(&free)? {
        return Err(KernelError::Precondition(format!(
            "the free variables {{{}}} do not contain their own ancestors",
            free.join(",")
        )));
    }
    let base = kernel_prop1(g, &Assignment::empty(), budget)?;
    let mut gens = base.ideal.into_generators();
    let targets = r.targets();
    for v in g.assignments(&free)? {
        let full = g.cons(&v, &r.t);
        let p = Polynomial::var(ParamId::joint(r.t.clone(), v));
        gens.push(p - marginal_form(g, &Assignment::empty(), &full, &targets));
    }
    let requests = vec![DistributionRequest::observational(), r];
    Ok(ConstraintSet::new(Method::Prop2, g, requests, gens))
}

/// Kernel for `{P, P_t}` when no free variable is an ancestor of another:
/// the two single-distribution kernels plus, for each full assignment `v`,
/// `f(v,t)·Σ_{w1,v_cons} p_v − Σ_{w1} p_v`, where `f(v,t)` is the product
/// over `V_i ∈ V_cons` of the `P_t` marginal of `V_i` at `v_i`.
pub fn kernel_lemma1(g: &CausalGraph, t: &Assignment, budget: &Budget) -> Result<ConstraintSet, KernelError> {
    require_observed(g)?;
    let r = single_request(g, t)?;
    if r.t.is_empty() {
        return Err(KernelError::Precondition("the intervention must fix at least one variable".into()));
    }
    let (w1, _w2) = g.antichain_split(&r.targets()).map_err(|e| match e {
        e @ GraphError::NotAntichain { .. } => KernelError::Precondition(e.to_string()),
        e => e.into(),
    })?;
    let observational = kernel_prop1(g, &Assignment::empty(), budget)?;
    let interventional = kernel_prop1(g, &r.t, budget)?;
    let mut gens = observational.ideal.into_generators();
    gens.extend(interventional.ideal.into_generators());
    let free = free_variables(g, &r.t);
    let empty = Assignment::empty();
    for v in g.assignments(&g.observed_names())? {
        let vcons = g.consistent_set(&v, &r.t);
        if vcons.is_empty() {
            continue;
        }
        let c = g.cons(&v, &r.t).restrict(|n| free.iter().any(|x| &**x == n));
        let f: Polynomial<ParamId> = vcons
            .iter()
            .map(|x| {
                let others: Vec<VarName> = free.iter().filter(|y| *y != x).cloned().collect();
                marginal_form(g, &r.t, &c, &others)
            })
            .product();
        let mut vary = w1.clone();
        vary.extend(vcons.iter().cloned());
        let wide = marginal_form(g, &empty, &v, &vary);
        let narrow = marginal_form(g, &empty, &v, &w1);
        gens.push(&f * &wide - narrow);
    }
    let requests = vec![DistributionRequest::observational(), r];
    Ok(ConstraintSet::new(Method::Lemma1, g, requests, gens))
}
