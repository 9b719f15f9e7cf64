//! Joint-space and model parameters and the polynomial map between them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::model::{Assignment, CausalGraph, GraphError, VarName};
use crate::ring::{Ideal, Polynomial};

/// An indeterminate of the polynomial ring.
///
/// The derived order puts auxiliary variables first, then model
/// parameters, then joint-space parameters; since the first variables rank
/// highest, model parameters are always above the joint-space block.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ParamId {
    Aux { tag: String },
    /// `q^i_{v_i, pa_i, u^i}`: the probability that `var` takes `value`
    /// given its observed and hidden parents.
    ModelQ { var: VarName, value: u32, parents: Assignment, hidden: Assignment },
    /// `r^j_{u_j}`: the marginal of a hidden variable.
    ModelR { var: VarName, value: u32 },
    /// `p^t_v`: one entry of the interventional distribution `P_t`, keyed by
    /// the free variables' values `v`.
    JointSpace { t: Assignment, v: Assignment },
}

impl ParamId {
    pub fn joint(t: Assignment, v: Assignment) -> Self {
        ParamId::JointSpace { t, v }
    }

    pub fn is_joint_space(&self) -> bool {
        matches!(self, ParamId::JointSpace { .. })
    }

    pub fn is_model(&self) -> bool {
        matches!(self, ParamId::ModelQ { .. } | ParamId::ModelR { .. })
    }

    pub fn is_aux(&self) -> bool {
        matches!(self, ParamId::Aux { .. })
    }
}

impl crate::ring::Variable for ParamId {
    fn auxiliary(index: usize) -> Self {
        ParamId::Aux { tag: format!("y{index}") }
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamId::Aux { tag } => write!(f, "aux[{tag}]"),
            ParamId::ModelQ { var, value, parents, hidden } => {
                write!(f, "q[{var}={value}|{parents}")?;
                if !hidden.is_empty() {
                    write!(f, ";{hidden}")?;
                }
                f.write_str("]")
            }
            ParamId::ModelR { var, value } => write!(f, "r[{var}={value}]"),
            ParamId::JointSpace { t, v } => write!(f, "p[{t}|{v}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid parameter `{0}`")]
pub struct ParseParamError(pub String);

impl FromStr for ParamId {
    type Err = ParseParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseParamError(s.to_string());
        let s = s.trim();
        let (head, rest) = s.split_once('[').ok_or_else(err)?;
        let body = rest.strip_suffix(']').ok_or_else(err)?;
        let asg = |x: &str| x.parse::<Assignment>().map_err(|_| err());
        match head {
            "aux" if !body.is_empty() && body.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
                Ok(ParamId::Aux { tag: body.to_string() })
            }
            "p" => {
                let (t, v) = body.split_once('|').ok_or_else(err)?;
                Ok(ParamId::JointSpace { t: asg(t)?, v: asg(v)? })
            }
            "r" => {
                let a = asg(body)?;
                match a.pairs() {
                    [(var, value)] => Ok(ParamId::ModelR { var: var.clone(), value: *value }),
                    _ => Err(err()),
                }
            }
            "q" => {
                let (own, cond) = body.split_once('|').ok_or_else(err)?;
                let (parents, hidden) = cond.split_once(';').unwrap_or((cond, ""));
                let own = asg(own)?;
                let [(var, value)] = own.pairs() else { return Err(err()) };
                Ok(ParamId::ModelQ { var: var.clone(), value: *value, parents: asg(parents)?, hidden: asg(hidden)? })
            }
            _ => Err(err()),
        }
    }
}

impl Serialize for ParamId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParamId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One interventional distribution `P_t(v)`; the empty `t` is the
/// observational distribution.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct DistributionRequest {
    pub t: Assignment,
}

impl DistributionRequest {
    pub fn new(t: Assignment) -> Self {
        DistributionRequest { t }
    }

    pub fn observational() -> Self {
        DistributionRequest::default()
    }

    /// Intervened variables, in declaration order.
    pub fn targets(&self) -> Vec<VarName> {
        self.t.names().cloned().collect()
    }
}

impl fmt::Display for DistributionRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.t)
    }
}

impl FromStr for DistributionRequest {
    type Err = crate::model::ParseAssignmentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(DistributionRequest { t: s.parse()? })
    }
}

impl Serialize for DistributionRequest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DistributionRequest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("request `{0}` intervenes on every observed variable")]
    FullIntervention(String),
    #[error("no distributions requested")]
    NoRequests,
    #[error("`{0}` is not a joint-space parameter")]
    NotJointSpace(String),
}

/// Validates requests against `g`, puts them in canonical form and order,
/// and drops duplicates.
pub fn canonical_requests(g: &CausalGraph, requests: &[DistributionRequest]) -> Result<Vec<DistributionRequest>, ParamError> {
    if requests.is_empty() {
        return Err(ParamError::NoRequests);
    }
    let n = g.observed().count();
    let mut out = BTreeSet::new();
    for r in requests {
        let t = g.canonical_assignment(&r.t)?;
        if t.len() == n {
            return Err(ParamError::FullIntervention(t.to_string()));
        }
        out.insert(DistributionRequest { t });
    }
    Ok(out.into_iter().collect())
}

/// Every distribution with `T` a proper subset of the observed variables.
pub fn all_requests(g: &CausalGraph) -> Vec<DistributionRequest> {
    let obs = g.observed_names();
    let n = obs.len();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        if mask.count_ones() as usize == n {
            continue;
        }
        let chosen: Vec<&VarName> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &obs[i]).collect();
        for t in g.assignments(&chosen).expect("declared variables") {
            out.push(DistributionRequest { t });
        }
    }
    out.sort();
    out
}

/// Observed variables not fixed by `t`, in declaration order.
pub fn free_variables(g: &CausalGraph, t: &Assignment) -> Vec<VarName> {
    g.observed().filter(|x| !t.contains(&x.name)).map(|x| x.name.clone()).collect()
}

/// The parameters `p^t_v` of one distribution, `v` in enumeration order.
pub fn request_params(g: &CausalGraph, request: &DistributionRequest) -> Vec<ParamId> {
    g.assignments(&free_variables(g, &request.t))
        .expect("declared variables")
        .into_iter()
        .map(|v| ParamId::joint(request.t.clone(), v))
        .collect()
}

pub fn joint_space_params(g: &CausalGraph, requests: &[DistributionRequest]) -> Result<Vec<ParamId>, ParamError> {
    Ok(canonical_requests(g, requests)?.iter().flat_map(|r| request_params(g, r)).collect())
}

/// Every `q` and `r` parameter, including the redundant last value of each
/// distribution.
pub fn model_params(g: &CausalGraph) -> Vec<ParamId> {
    model_param_groups(g).into_iter().flatten().collect()
}

/// Model parameters grouped by the distribution they belong to; each group
/// sums to one.
pub fn model_param_groups(g: &CausalGraph) -> Vec<Vec<ParamId>> {
    let mut groups = Vec::new();
    for x in g.observed() {
        let pa = g.parents(&x.name);
        let hp = g.hidden_parents(&x.name);
        for parents in g.assignments(&pa).expect("declared") {
            for hidden in g.assignments(&hp).expect("declared") {
                groups.push(
                    (1..=x.cardinality)
                        .map(|value| ParamId::ModelQ {
                            var: x.name.clone(),
                            value,
                            parents: parents.clone(),
                            hidden: hidden.clone(),
                        })
                        .collect(),
                );
            }
        }
    }
    for u in g.hidden() {
        groups.push((1..=u.cardinality).map(|value| ParamId::ModelR { var: u.name.clone(), value }).collect());
    }
    groups
}

/// `Σ group − 1` for every group of [`model_param_groups`].
pub fn sum_to_one_generators(g: &CausalGraph) -> Vec<Polynomial<ParamId>> {
    model_param_groups(g).into_iter().map(|grp| Polynomial::sum_of(grp) - Polynomial::one()).collect()
}

/// The `q` factor of `x` under the full assignment `full` (observed and
/// hidden values).
pub(crate) fn q_param(g: &CausalGraph, x: &str, full: &Assignment) -> ParamId {
    let pick = |names: Vec<VarName>| {
        Assignment::from_pairs(names.into_iter().map(|n| {
            let val = full.get(&n).expect("parent value present");
            (n, val)
        }))
    };
    ParamId::ModelQ {
        var: g.variable(x).expect("declared").name.clone(),
        value: full.get(x).expect("value present"),
        parents: pick(g.parents(x)),
        hidden: pick(g.hidden_parents(x)),
    }
}

/// Hidden variables with at least one child among `free`.
pub(crate) fn relevant_hidden(g: &CausalGraph, free: &[VarName]) -> Vec<VarName> {
    g.hidden()
        .filter(|u| g.children(&u.name).iter().any(|c| free.contains(c)))
        .map(|u| u.name.clone())
        .collect()
}

fn merge(a: &Assignment, b: &Assignment) -> Assignment {
    Assignment::from_pairs(a.pairs().iter().chain(b.pairs()).cloned())
}

/// The image of `p^t_v` under the parameterization: the truncated product
/// of `q` factors, summed over hidden values weighted by `r`.
///
/// Hidden variables with no free child are left out of the sum; their
/// weights would sum to one.
pub fn image_polynomial(g: &CausalGraph, id: &ParamId) -> Result<Polynomial<ParamId>, ParamError> {
    let ParamId::JointSpace { t, v } = id else {
        return Err(ParamError::NotJointSpace(id.to_string()));
    };
    let free = free_variables(g, t);
    let observed = merge(t, v);
    let hidden = relevant_hidden(g, &free);
    let mut terms = Vec::new();
    for u in g.assignments(&hidden)? {
        let full = merge(&observed, &u);
        let mut factors: Vec<ParamId> = free.iter().map(|x| q_param(g, x, &full)).collect();
        factors.extend(u.iter().map(|(n, val)| ParamId::ModelR { var: n.clone(), value: val }));
        terms.push(Polynomial::product_of(factors));
    }
    Ok(terms.into_iter().sum())
}

/// The ideal `⟨p − image(p)⟩ + sum-to-one` whose elimination ideal is the
/// kernel of the parameterization.
pub fn mapping_ideal(g: &CausalGraph, requests: &[DistributionRequest]) -> Result<Ideal<ParamId>, ParamError> {
    let params = joint_space_params(g, requests)?;
    let mut gens = Vec::with_capacity(params.len());
    for p in params {
        let image = image_polynomial(g, &p)?;
        gens.push(Polynomial::var(p) - image);
    }
    gens.extend(sum_to_one_generators(g));
    Ok(Ideal::new(gens))
}
