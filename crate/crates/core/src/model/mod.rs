//! Causal graphs and the graph-theoretic queries used by the kernel and
//! reduction layers.

mod assignment;
mod parse;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use sha2::{Digest, Sha256};

pub use assignment::{Assignment, ParseAssignmentError, VarName};
pub(crate) use assignment::is_identifier;
pub use parse::parse_graph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Observed,
    Hidden,
}

/// One vertex of a causal graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: VarName,
    pub cardinality: u32,
    pub kind: VarKind,
}

impl Variable {
    pub fn is_hidden(&self) -> bool {
        self.kind == VarKind::Hidden
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid variable name `{0}`")]
    InvalidName(String),
    #[error("duplicate variable `{0}`")]
    Duplicate(String),
    #[error("unknown variable `{0}`")]
    Unknown(String),
    #[error("variable `{0}` must be observed here")]
    NotObserved(String),
    #[error("cardinality of `{name}` must be at least 2, got {cardinality}")]
    Cardinality { name: String, cardinality: u32 },
    #[error("hidden variable `{0}` cannot have a parent")]
    HiddenWithParent(String),
    #[error("hidden variable `{0}` cannot be the parent of another hidden variable")]
    HiddenParentOfHidden(String),
    #[error("the graph has a cycle through `{0}`")]
    Cycle(String),
    #[error("value {value} out of range for `{name}` (cardinality {cardinality})")]
    ValueOutOfRange { name: String, value: u32, cardinality: u32 },
    #[error("variable `{0}` assigned twice")]
    Reassigned(String),
    #[error("`{a}` and `{b}` are ancestrally related, so the free variables do not form an antichain")]
    NotAntichain { a: String, b: String },
    #[error("the graph has hidden variables; local Markov statements need a fully observed graph")]
    HasHidden,
}

/// `a ⊥ b | c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndependenceStatement {
    pub a: VarName,
    pub b: Vec<VarName>,
    pub c: Vec<VarName>,
}

impl fmt::Display for IndependenceStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⊥ {{{}}} | {{{}}}", self.a, self.b.join(","), self.c.join(","))
    }
}

/// A directed acyclic graph over observed and hidden discrete variables.
///
/// Hidden variables are root causes only. Declaration order is the
/// canonical order for everything derived from the graph: assignments,
/// enumerations, rendered output.
#[derive(Clone, Debug)]
pub struct CausalGraph {
    vars: Vec<Variable>,
    index: HashMap<VarName, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl PartialEq for CausalGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.parents == other.parents
    }
}

impl Eq for CausalGraph {}

/// Accumulates declarations for [`CausalGraph::from_parts`].
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    vars: Vec<Variable>,
    edges: Vec<(String, String)>,
}

impl GraphBuilder {
    pub fn observed(mut self, name: &str, cardinality: u32) -> Self {
        self.vars.push(Variable { name: name.into(), cardinality, kind: VarKind::Observed });
        self
    }

    pub fn hidden(mut self, name: &str, cardinality: u32) -> Self {
        self.vars.push(Variable { name: name.into(), cardinality, kind: VarKind::Hidden });
        self
    }

    pub fn edge(mut self, parent: &str, child: &str) -> Self {
        self.edges.push((parent.to_string(), child.to_string()));
        self
    }

    pub fn build(self) -> Result<CausalGraph, GraphError> {
        CausalGraph::from_parts(self.vars, self.edges)
    }
}

impl CausalGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn from_parts(
        vars: Vec<Variable>,
        edges: impl IntoIterator<Item = (impl AsRef<str>, impl AsRef<str>)>,
    ) -> Result<Self, GraphError> {
        let mut index = HashMap::new();
        for (i, v) in vars.iter().enumerate() {
            if !is_identifier(&v.name) {
                return Err(GraphError::InvalidName(v.name.to_string()));
            }
            if v.cardinality < 2 {
                return Err(GraphError::Cardinality { name: v.name.to_string(), cardinality: v.cardinality });
            }
            if index.insert(v.name.clone(), i).is_some() {
                return Err(GraphError::Duplicate(v.name.to_string()));
            }
        }
        let n = vars.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (p, c) in edges {
            let (p, c) = (p.as_ref(), c.as_ref());
            let pi = *index.get(p).ok_or_else(|| GraphError::Unknown(p.to_string()))?;
            let ci = *index.get(c).ok_or_else(|| GraphError::Unknown(c.to_string()))?;
            if vars[ci].is_hidden() {
                return Err(if vars[pi].is_hidden() {
                    GraphError::HiddenParentOfHidden(p.to_string())
                } else {
                    GraphError::HiddenWithParent(c.to_string())
                });
            }
            if pi == ci {
                return Err(GraphError::Cycle(p.to_string()));
            }
            if !parents[ci].contains(&pi) {
                parents[ci].push(pi);
                children[pi].push(ci);
            }
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        // Kahn's algorithm, always taking the ready vertex declared first.
        let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            topo.push(i);
            for &c in &children[i] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if topo.len() < n {
            let stuck = (0..n).find(|&i| indeg[i] > 0).unwrap();
            return Err(GraphError::Cycle(vars[stuck].name.to_string()));
        }
        Ok(CausalGraph { vars, index, parents, children, topo })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn observed(&self) -> impl Iterator<Item = &Variable> {
        self.vars.iter().filter(|v| !v.is_hidden())
    }

    pub fn hidden(&self) -> impl Iterator<Item = &Variable> {
        self.vars.iter().filter(|v| v.is_hidden())
    }

    pub fn observed_names(&self) -> Vec<VarName> {
        self.observed().map(|v| v.name.clone()).collect()
    }

    pub fn hidden_names(&self) -> Vec<VarName> {
        self.hidden().map(|v| v.name.clone()).collect()
    }

    pub fn has_hidden(&self) -> bool {
        self.vars.iter().any(Variable::is_hidden)
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.index.get(name).map(|&i| &self.vars[i])
    }

    pub fn cardinality(&self, name: &str) -> Option<u32> {
        self.variable(name).map(|v| v.cardinality)
    }

    /// Position of `name` in declaration order.
    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn idx(&self, name: &str) -> Result<usize, GraphError> {
        self.position(name).ok_or_else(|| GraphError::Unknown(name.to_string()))
    }

    fn observed_idx(&self, name: &str) -> Result<usize, GraphError> {
        let i = self.idx(name)?;
        if self.vars[i].is_hidden() {
            return Err(GraphError::NotObserved(name.to_string()));
        }
        Ok(i)
    }

    fn names(&self, idx: impl IntoIterator<Item = usize>) -> Vec<VarName> {
        idx.into_iter().map(|i| self.vars[i].name.clone()).collect()
    }

    /// Indices of the named observed variables, validated and sorted.
    fn observed_set<S: AsRef<str>>(&self, names: &[S]) -> Result<BTreeSet<usize>, GraphError> {
        names.iter().map(|n| self.observed_idx(n.as_ref())).collect()
    }

    /// Observed parents in declaration order.
    pub fn parents(&self, name: &str) -> Vec<VarName> {
        self.index
            .get(name)
            .map(|&i| self.names(self.parents[i].iter().copied().filter(|&p| !self.vars[p].is_hidden())))
            .unwrap_or_default()
    }

    /// Hidden parents in declaration order.
    pub fn hidden_parents(&self, name: &str) -> Vec<VarName> {
        self.index
            .get(name)
            .map(|&i| self.names(self.parents[i].iter().copied().filter(|&p| self.vars[p].is_hidden())))
            .unwrap_or_default()
    }

    pub fn children(&self, name: &str) -> Vec<VarName> {
        self.index.get(name).map(|&i| self.names(self.children[i].iter().copied())).unwrap_or_default()
    }

    /// Edges as `(parent, child)`, ordered by parent then child declaration.
    pub fn edges(&self) -> Vec<(VarName, VarName)> {
        let mut out = Vec::new();
        for (p, cs) in self.children.iter().enumerate() {
            for &c in cs {
                out.push((self.vars[p].name.clone(), self.vars[c].name.clone()));
            }
        }
        out
    }

    /// All variables, parents before children, ties broken by declaration
    /// order.
    pub fn topological_order(&self) -> Vec<VarName> {
        self.names(self.topo.iter().copied())
    }

    /// Observed variables only, parents before children.
    pub fn observed_topological_order(&self) -> Vec<VarName> {
        self.names(self.topo.iter().copied().filter(|&i| !self.vars[i].is_hidden()))
    }

    /// Observed variables read from sinks to sources: each vertex comes
    /// before all of its observed parents, ties broken by declaration order.
    pub fn sink_first_order(&self) -> Vec<VarName> {
        let obs: Vec<usize> = (0..self.vars.len()).filter(|&i| !self.vars[i].is_hidden()).collect();
        let mut outdeg: Vec<usize> = self.children.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = obs.iter().copied().filter(|&i| outdeg[i] == 0).collect();
        let mut out = Vec::with_capacity(obs.len());
        while let Some(i) = ready.pop_first() {
            out.push(i);
            for &p in &self.parents[i] {
                outdeg[p] -= 1;
                if outdeg[p] == 0 && !self.vars[p].is_hidden() {
                    ready.insert(p);
                }
            }
        }
        self.names(out)
    }

    fn reach(&self, start: usize, next: &[Vec<usize>], observed_only: bool) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &j in &next[i] {
                if observed_only && self.vars[j].is_hidden() {
                    continue;
                }
                if seen.insert(j) {
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// Proper descendants of `name`.
    pub fn descendants(&self, name: &str) -> Result<Vec<VarName>, GraphError> {
        Ok(self.names(self.reach(self.idx(name)?, &self.children, false)))
    }

    /// Proper observed ancestors of `name`, through observed vertices.
    pub fn ancestors(&self, name: &str) -> Result<Vec<VarName>, GraphError> {
        Ok(self.names(self.reach(self.idx(name)?, &self.parents, true)))
    }

    /// The subgraph on `keep`, together with every hidden variable that has
    /// a child in `keep`.
    pub fn induced_subgraph<S: AsRef<str>>(&self, keep: &[S]) -> Result<CausalGraph, GraphError> {
        let keep = self.observed_set(keep)?;
        let retained: Vec<usize> = (0..self.vars.len())
            .filter(|i| {
                keep.contains(i) || (self.vars[*i].is_hidden() && self.children[*i].iter().any(|c| keep.contains(c)))
            })
            .collect();
        let vars = retained.iter().map(|&i| self.vars[i].clone()).collect();
        let edges: Vec<(VarName, VarName)> = self
            .edges()
            .into_iter()
            .filter(|(p, c)| {
                let (p, c) = (self.index[p], self.index[c]);
                retained.contains(&p) && retained.contains(&c)
            })
            .collect();
        CausalGraph::from_parts(vars, edges)
    }

    /// Partition of the observed variables into c-components: classes of
    /// vertices joined by paths through shared hidden parents. Blocks are
    /// ordered by their first member; members in declaration order.
    pub fn c_components(&self) -> Vec<Vec<VarName>> {
        let n = self.vars.len();
        let mut root: Vec<usize> = (0..n).collect();
        fn find(root: &mut [usize], mut i: usize) -> usize {
            while root[i] != i {
                root[i] = root[root[i]];
                i = root[i];
            }
            i
        }
        for (u, var) in self.vars.iter().enumerate() {
            if !var.is_hidden() {
                continue;
            }
            for w in self.children[u].windows(2) {
                let (a, b) = (find(&mut root, w[0]), find(&mut root, w[1]));
                if a != b {
                    root[a.max(b)] = a.min(b);
                }
            }
        }
        let mut blocks: Vec<(usize, Vec<usize>)> = Vec::new();
        for i in (0..n).filter(|&i| !self.vars[i].is_hidden()) {
            let r = find(&mut root, i);
            match blocks.iter_mut().find(|(br, _)| *br == r) {
                Some((_, members)) => members.push(i),
                None => blocks.push((r, vec![i])),
            }
        }
        blocks.into_iter().map(|(_, m)| self.names(m)).collect()
    }

    /// True when `a` contains every observed ancestor of its members.
    pub fn is_ancestral<S: AsRef<str>>(&self, a: &[S]) -> Result<bool, GraphError> {
        let set = self.observed_set(a)?;
        Ok(set
            .iter()
            .all(|&i| self.parents[i].iter().all(|&p| self.vars[p].is_hidden() || set.contains(&p))))
    }

    /// One statement `V ⊥ ND(V)∖PA(V) | PA(V)` per vertex, in declaration
    /// order, skipping vertices whose independent set is empty.
    pub fn local_markov(&self) -> Result<Vec<IndependenceStatement>, GraphError> {
        if self.has_hidden() {
            return Err(GraphError::HasHidden);
        }
        let mut out = Vec::new();
        for i in 0..self.vars.len() {
            let desc = self.reach(i, &self.children, false);
            let b: Vec<usize> =
                (0..self.vars.len()).filter(|j| *j != i && !desc.contains(j) && !self.parents[i].contains(j)).collect();
            if b.is_empty() {
                continue;
            }
            out.push(IndependenceStatement {
                a: self.vars[i].name.clone(),
                b: self.names(b),
                c: self.names(self.parents[i].iter().copied()),
            });
        }
        Ok(out)
    }

    /// Validates an assignment to observed variables and puts it in
    /// declaration order.
    pub fn canonical_assignment(&self, a: &Assignment) -> Result<Assignment, GraphError> {
        let mut pairs: Vec<(usize, VarName, u32)> = Vec::with_capacity(a.len());
        for (name, value) in a.iter() {
            let i = self.observed_idx(name)?;
            let card = self.vars[i].cardinality;
            if value == 0 || value > card {
                return Err(GraphError::ValueOutOfRange { name: name.to_string(), value, cardinality: card });
            }
            if pairs.iter().any(|(j, _, _)| *j == i) {
                return Err(GraphError::Reassigned(name.to_string()));
            }
            pairs.push((i, self.vars[i].name.clone(), value));
        }
        pairs.sort_by_key(|(i, _, _)| *i);
        Ok(Assignment::from_pairs(pairs.into_iter().map(|(_, n, v)| (n, v))))
    }

    /// Every joint assignment of the named variables (observed or hidden),
    /// in declaration order with the last variable varying fastest.
    pub fn assignments<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<Assignment>, GraphError> {
        let mut idx: Vec<usize> = names.iter().map(|n| self.idx(n.as_ref())).collect::<Result<_, _>>()?;
        idx.sort_unstable();
        idx.dedup();
        let cards: Vec<u32> = idx.iter().map(|&i| self.vars[i].cardinality).collect();
        let total: usize = cards.iter().map(|&c| c as usize).product();
        let mut out = Vec::with_capacity(total);
        let mut cur = vec![1u32; idx.len()];
        for _ in 0..total {
            out.push(Assignment::from_pairs(idx.iter().zip(&cur).map(|(&i, &v)| (self.vars[i].name.clone(), v))));
            for k in (0..cur.len()).rev() {
                if cur[k] < cards[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = 1;
            }
        }
        Ok(out)
    }

    /// `V_cons`: the free variables whose own value and parent values in
    /// `v` agree with `t`.
    pub fn consistent_set(&self, v: &Assignment, t: &Assignment) -> Vec<VarName> {
        self.observed()
            .filter(|x| !t.contains(&x.name))
            .filter(|x| {
                let ok_self = v.get(&x.name).is_none_or(|val| t.get(&x.name).is_none_or(|w| w == val));
                ok_self
                    && self
                        .parents(&x.name)
                        .iter()
                        .all(|p| match (v.get(p), t.get(p)) {
                            (Some(a), Some(b)) => a == b,
                            _ => true,
                        })
            })
            .map(|x| x.name.clone())
            .collect()
    }

    /// `v` with the intervened entries replaced by `t`.
    pub fn cons(&self, v: &Assignment, t: &Assignment) -> Assignment {
        Assignment::from_pairs(
            self.observed()
                .filter_map(|x| t.get(&x.name).or_else(|| v.get(&x.name)).map(|val| (x.name.clone(), val))),
        )
    }

    /// For an intervened set `t_vars` whose complement is an antichain,
    /// splits `t_vars` into the vertices below some free vertex (`W1`) and
    /// the rest (`W2`).
    pub fn antichain_split<S: AsRef<str>>(&self, t_vars: &[S]) -> Result<(Vec<VarName>, Vec<VarName>), GraphError> {
        let t = self.observed_set(t_vars)?;
        let free: Vec<usize> = (0..self.vars.len()).filter(|i| !self.vars[*i].is_hidden() && !t.contains(i)).collect();
        let desc: Vec<BTreeSet<usize>> = free.iter().map(|&i| self.reach(i, &self.children, false)).collect();
        for (x, &a) in free.iter().enumerate() {
            for &b in &free[x + 1..] {
                if desc[x].contains(&b) || self.reach(b, &self.children, false).contains(&a) {
                    return Err(GraphError::NotAntichain {
                        a: self.vars[a].name.to_string(),
                        b: self.vars[b].name.to_string(),
                    });
                }
            }
        }
        let below: BTreeSet<usize> = desc.into_iter().flatten().collect();
        let (w1, w2): (Vec<usize>, Vec<usize>) = t.iter().partition(|i| below.contains(i));
        Ok((self.names(w1), self.names(w2)))
    }

    /// Line-based text form accepted by [`parse_graph`]; variables in
    /// declaration order, then edges.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.vars {
            match v.kind {
                VarKind::Observed => s.push_str(&format!("obs {} {}\n", v.name, v.cardinality)),
                VarKind::Hidden => s.push_str(&format!("hidden {} {}\n", v.name, v.cardinality)),
            }
        }
        for (p, c) in self.edges() {
            s.push_str(&format!("edge {p} {c}\n"));
        }
        s
    }

    /// Hex SHA-256 of [`to_text`](Self::to_text).
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

impl fmt::Display for CausalGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl std::str::FromStr for CausalGraph {
    type Err = GraphError;
    fn from_str(s: &str) -> Result<Self, GraphError> {
        parse_graph(s)
    }
}
