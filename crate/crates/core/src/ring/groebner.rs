//! Buchberger's algorithm over dense exponent vectors.
//!
//! Pairs are pruned with the Gebauer–Möller criteria and selected by sugar
//! degree. Pairs of equal minimal sugar are reduced as a batch in parallel
//! against a snapshot of the basis; the results are then committed one by
//! one in batch order, each re-reduced against everything committed before
//! it. Batch composition never depends on the thread count, so the
//! resulting (reduced) basis is identical for any pool size.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use super::monomial::{Monomial, Variable};
use super::order::{DenseOrder, MonomialOrder};
use super::polynomial::Polynomial;
use super::rational::Rational;
use super::RingError;

/// Resource limits for a Gröbner basis computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Budget {
    /// Maximum number of S-polynomials reduced.
    pub max_pairs: usize,
    /// Maximum total degree of any basis element.
    pub max_degree: u32,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_pairs: 200_000, max_degree: 40 }
    }
}

/// Counters from one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GroebnerStats {
    pub pairs_reduced: usize,
    pub pairs_pruned: usize,
    pub zero_reductions: usize,
    pub basis_size: usize,
}

const BATCH: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Exps {
    e: Box<[u16]>,
    deg: u32,
    mask: u64,
}

impl Exps {
    fn new(e: Box<[u16]>) -> Self {
        let deg = e.iter().map(|&x| x as u32).sum();
        let mask = e
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0)
            .fold(0u64, |m, (i, _)| m | (1u64 << (i % 64)));
        Exps { e, deg, mask }
    }

    fn divides(&self, other: &Exps) -> bool {
        self.mask & !other.mask == 0
            && self.deg <= other.deg
            && self.e.iter().zip(other.e.iter()).all(|(a, b)| a <= b)
    }

    fn mul(&self, other: &Exps) -> Exps {
        Exps::new(self.e.iter().zip(other.e.iter()).map(|(a, b)| a + b).collect())
    }

    fn div(&self, other: &Exps) -> Exps {
        Exps::new(self.e.iter().zip(other.e.iter()).map(|(a, b)| a - b).collect())
    }

    fn lcm(&self, other: &Exps) -> Exps {
        Exps::new(self.e.iter().zip(other.e.iter()).map(|(a, b)| *a.max(b)).collect())
    }

    fn coprime(&self, other: &Exps) -> bool {
        self.mask & other.mask == 0
            || self.e.iter().zip(other.e.iter()).all(|(a, b)| *a == 0 || *b == 0)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct DPoly {
    /// Decreasing under the active order.
    terms: Vec<(Rational, Exps)>,
    sugar: u32,
}

impl DPoly {
    fn lm(&self) -> &Exps {
        &self.terms[0].1
    }

    fn lc(&self) -> &Rational {
        &self.terms[0].0
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.1.deg).max().unwrap_or(0)
    }

    fn make_monic(&mut self) {
        if let Some((lc, _)) = self.terms.first() {
            if !lc.is_one() {
                let inv = lc.recip();
                for (c, _) in &mut self.terms {
                    *c = &*c * &inv;
                }
            }
        }
    }
}

/// `a - coef * mult * b`, all term lists decreasing.
fn sub_scaled(
    a: &[(Rational, Exps)],
    coef: &Rational,
    mult: &Exps,
    b: &[(Rational, Exps)],
    order: &DenseOrder,
) -> Vec<(Rational, Exps)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut i = 0;
    let mut bi = b.iter().map(|(c, m)| (c, m.mul(mult))).peekable();
    while i < a.len() {
        let Some((bc, bm)) = bi.peek() else { break };
        match order.cmp(&a[i].1.e, &bm.e) {
            Ordering::Greater => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Less => {
                out.push((-(coef * *bc), bm.clone()));
                bi.next();
            }
            Ordering::Equal => {
                let c = &a[i].0 - &(coef * *bc);
                if !c.is_zero() {
                    out.push((c, bm.clone()));
                }
                i += 1;
                bi.next();
            }
        }
    }
    out.extend(a[i..].iter().cloned());
    out.extend(bi.map(|(c, m)| (-(coef * c), m)));
    out
}

/// Reduces `f` against `basis`, always using the first divisor found in
/// basis order. With `full` unset only the leading term is reduced.
fn reduce(f: DPoly, basis: &[&DPoly], order: &DenseOrder, full: bool) -> DPoly {
    let mut sugar = f.sugar;
    let mut rem: Vec<(Rational, Exps)> = Vec::new();
    let mut cur = f.terms;
    let mut pos = 0;
    while pos < cur.len() {
        let divisor = basis.iter().find(|g| g.lm().divides(&cur[pos].1));
        match divisor {
            Some(g) => {
                let mult = cur[pos].1.div(g.lm());
                let coef = &cur[pos].0 / g.lc();
                sugar = sugar.max(mult.deg + g.sugar);
                cur = sub_scaled(&cur[pos + 1..], &coef, &mult, &g.terms[1..], order);
                pos = 0;
            }
            None => {
                if !full {
                    rem.extend(cur.drain(pos..));
                    break;
                }
                rem.push(cur[pos].clone());
                pos += 1;
            }
        }
    }
    DPoly { terms: rem, sugar }
}

#[derive(Clone, Debug)]
struct Pair {
    i: usize,
    j: usize,
    lcm: Exps,
    sugar: u32,
}

fn s_polynomial(f: &DPoly, g: &DPoly, lcm: &Exps, order: &DenseOrder) -> DPoly {
    let mf = lcm.div(f.lm());
    let mg = lcm.div(g.lm());
    let sugar = (f.sugar + mf.deg).max(g.sugar + mg.deg);
    // f and g are monic, so S = mf*f - mg*g
    let left: Vec<(Rational, Exps)> = f.terms[1..].iter().map(|(c, m)| (c.clone(), m.mul(&mf))).collect();
    let terms = sub_scaled(&left, &Rational::one(), &mg, &g.terms[1..], order);
    DPoly { terms, sugar }
}

/// Dense workspace shared by the public entry points.
pub(crate) struct Context<V> {
    vars: Vec<V>,
    index: HashMap<V, usize>,
    order: DenseOrder,
}

impl<V: Variable> Context<V> {
    pub(crate) fn new<'a>(polys: impl IntoIterator<Item = &'a Polynomial<V>>, order: &MonomialOrder<V>) -> Self {
        let vars: BTreeSet<V> = polys.into_iter().flat_map(|p| p.variables()).collect();
        let vars: Vec<V> = vars.into_iter().collect();
        let (perm, dense) = order.compile(&vars);
        let index = perm.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        Context { vars: perm, index, order: dense }
    }

    fn to_dense(&self, p: &Polynomial<V>) -> DPoly {
        let n = self.vars.len();
        let mut terms: Vec<(Rational, Exps)> = p
            .terms()
            .iter()
            .map(|(c, m)| {
                let mut e = vec![0u16; n];
                for (v, x) in m.factors() {
                    e[self.index[v]] = *x as u16;
                }
                (c.clone(), Exps::new(e.into_boxed_slice()))
            })
            .collect();
        terms.sort_by(|a, b| self.order.cmp(&b.1.e, &a.1.e));
        let sugar = terms.iter().map(|t| t.1.deg).max().unwrap_or(0);
        DPoly { terms, sugar }
    }

    fn from_dense(&self, p: &DPoly) -> Polynomial<V> {
        Polynomial::from_terms(p.terms.iter().map(|(c, e)| {
            (
                c.clone(),
                Monomial::from_factors(
                    e.e.iter()
                        .enumerate()
                        .filter(|(_, &x)| x > 0)
                        .map(|(i, &x)| (self.vars[i].clone(), x as u32)),
                ),
            )
        }))
    }
}

struct Engine<'a> {
    order: &'a DenseOrder,
    budget: Budget,
    polys: Vec<DPoly>,
    active: Vec<usize>,
    pairs: Vec<Pair>,
    stats: GroebnerStats,
}

impl<'a> Engine<'a> {
    fn basis_refs(&self) -> Vec<&DPoly> {
        self.active.iter().map(|&k| &self.polys[k]).collect()
    }

    fn check_degree(&self, h: &DPoly) -> Result<(), RingError> {
        let d = h.degree();
        if d > self.budget.max_degree {
            return Err(RingError::Intractable {
                reason: format!(
                    "basis element of total degree {d} exceeds the limit of {}",
                    self.budget.max_degree
                ),
                pairs: self.stats.pairs_reduced,
            });
        }
        Ok(())
    }

    /// Gebauer–Möller update for a new monic, fully reduced element.
    fn update(&mut self, h: DPoly) {
        let hi = self.polys.len();
        let h_lm = h.lm().clone();
        self.polys.push(h);

        let candidates: Vec<Pair> = self
            .active
            .iter()
            .map(|&g| {
                let lcm = h_lm.lcm(self.polys[g].lm());
                let sugar = (self.polys[hi].sugar + lcm.deg - h_lm.deg)
                    .max(self.polys[g].sugar + lcm.deg - self.polys[g].lm().deg);
                Pair { i: g, j: hi, lcm, sugar }
            })
            .collect();

        // Chain criterion among the new pairs.
        let mut kept: Vec<Pair> = Vec::new();
        for (k, p) in candidates.iter().enumerate() {
            let coprime = h_lm.coprime(self.polys[p.i].lm());
            let dominated = || {
                candidates[k + 1..].iter().any(|q| q.lcm.divides(&p.lcm))
                    || kept.iter().any(|q| q.lcm.divides(&p.lcm))
            };
            if coprime || !dominated() {
                kept.push(p.clone());
            } else {
                self.stats.pairs_pruned += 1;
            }
        }
        // Product criterion.
        let before = kept.len();
        kept.retain(|p| !h_lm.coprime(self.polys[p.i].lm()));
        self.stats.pairs_pruned += before - kept.len();

        // Old pairs made redundant by h.
        let before = self.pairs.len();
        let polys = &self.polys;
        self.pairs.retain(|p| {
            !(h_lm.divides(&p.lcm)
                && h_lm.lcm(polys[p.i].lm()) != p.lcm
                && h_lm.lcm(polys[p.j].lm()) != p.lcm)
        });
        self.stats.pairs_pruned += before - self.pairs.len();
        self.pairs.extend(kept);

        let polys = &self.polys;
        self.active.retain(|&g| !h_lm.divides(polys[g].lm()));
        self.active.push(hi);
    }

    fn select_batch(&mut self) -> Vec<Pair> {
        let order = self.order;
        let key = |a: &Pair, b: &Pair| {
            a.sugar
                .cmp(&b.sugar)
                .then_with(|| order.cmp(&a.lcm.e, &b.lcm.e))
                .then_with(|| (a.i, a.j).cmp(&(b.i, b.j)))
        };
        let min_sugar = self.pairs.iter().map(|p| p.sugar).min().unwrap();
        let (mut batch, rest): (Vec<Pair>, Vec<Pair>) =
            self.pairs.drain(..).partition(|p| p.sugar == min_sugar);
        self.pairs = rest;
        batch.sort_by(key);
        if batch.len() > BATCH {
            self.pairs.extend(batch.drain(BATCH..));
        }
        batch
    }

    fn add_generator(&mut self, f: DPoly) -> Result<(), RingError> {
        let mut h = reduce(f, &self.basis_refs(), self.order, true);
        if h.is_zero() {
            return Ok(());
        }
        h.make_monic();
        self.check_degree(&h)?;
        self.update(h);
        Ok(())
    }

    fn run(&mut self) -> Result<(), RingError> {
        while !self.pairs.is_empty() {
            let batch = self.select_batch();
            if self.stats.pairs_reduced + batch.len() > self.budget.max_pairs {
                return Err(RingError::Intractable {
                    reason: format!("S-pair limit of {} reached", self.budget.max_pairs),
                    pairs: self.stats.pairs_reduced,
                });
            }
            self.stats.pairs_reduced += batch.len();
            let snapshot = self.basis_refs();
            let order = self.order;
            let polys = &self.polys;
            let reduced: Vec<DPoly> = batch
                .par_iter()
                .map(|p| {
                    let s = s_polynomial(&polys[p.i], &polys[p.j], &p.lcm, order);
                    reduce(s, &snapshot, order, false)
                })
                .collect();
            for r in reduced {
                if r.is_zero() {
                    self.stats.zero_reductions += 1;
                    continue;
                }
                let mut h = reduce(r, &self.basis_refs(), self.order, true);
                if h.is_zero() {
                    self.stats.zero_reductions += 1;
                    continue;
                }
                h.make_monic();
                self.check_degree(&h)?;
                self.update(h);
            }
        }
        Ok(())
    }

    /// Reduced basis sorted by increasing leading monomial.
    fn reduced_basis(&self) -> Vec<DPoly> {
        let mut basis: Vec<&DPoly> = self.basis_refs();
        basis.sort_by(|a, b| self.order.cmp(&a.lm().e, &b.lm().e));
        (0..basis.len())
            .map(|k| {
                let g = basis[k];
                let others: Vec<&DPoly> =
                    basis.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, p)| *p).collect();
                let tail = DPoly { terms: g.terms[1..].to_vec(), sugar: g.sugar };
                let tail = reduce(tail, &others, self.order, true);
                let mut terms = vec![g.terms[0].clone()];
                terms.extend(tail.terms);
                DPoly { terms, sugar: g.sugar }
            })
            .collect()
    }
}

/// Reduced Gröbner basis of the ideal generated by `generators`.
pub fn groebner_basis<V: Variable>(
    generators: &[Polynomial<V>],
    order: &MonomialOrder<V>,
    budget: &Budget,
) -> Result<Vec<Polynomial<V>>, RingError> {
    groebner_basis_with_stats(generators, order, budget).map(|(b, _)| b)
}

pub fn groebner_basis_with_stats<V: Variable>(
    generators: &[Polynomial<V>],
    order: &MonomialOrder<V>,
    budget: &Budget,
) -> Result<(Vec<Polynomial<V>>, GroebnerStats), RingError> {
    let ctx = Context::new(generators.iter(), order);
    let mut inputs: Vec<DPoly> = generators
        .iter()
        .map(|g| ctx.to_dense(g))
        .filter(|p| !p.is_zero())
        .collect();
    for p in &mut inputs {
        p.make_monic();
    }
    inputs.sort_by(|a, b| ctx.order.cmp(&a.lm().e, &b.lm().e));

    let mut engine = Engine {
        order: &ctx.order,
        budget: *budget,
        polys: Vec::new(),
        active: Vec::new(),
        pairs: Vec::new(),
        stats: GroebnerStats::default(),
    };
    for p in inputs {
        engine.add_generator(p)?;
    }
    engine.run()?;
    let basis = engine.reduced_basis();
    let mut stats = engine.stats;
    stats.basis_size = basis.len();
    Ok((basis.iter().map(|p| ctx.from_dense(p)).collect(), stats))
}

/// Remainder of `f` on division by `basis`, reducing every term and always
/// dividing by the first basis element whose leading monomial divides.
pub fn normal_form<V: Variable>(
    f: &Polynomial<V>,
    basis: &[Polynomial<V>],
    order: &MonomialOrder<V>,
) -> Polynomial<V> {
    let ctx = Context::new(basis.iter().chain(std::iter::once(f)), order);
    let dense: Vec<DPoly> = basis
        .iter()
        .filter(|b| !b.is_zero())
        .map(|b| ctx.to_dense(b))
        .collect();
    let refs: Vec<&DPoly> = dense.iter().collect();
    ctx.from_dense(&reduce(ctx.to_dense(f), &refs, &ctx.order, true))
}

/// Buchberger's criterion: every S-polynomial of `basis` reduces to zero.
pub fn is_groebner_basis<V: Variable>(basis: &[Polynomial<V>], order: &MonomialOrder<V>) -> bool {
    let ctx = Context::new(basis.iter(), order);
    let mut dense: Vec<DPoly> = basis
        .iter()
        .filter(|b| !b.is_zero())
        .map(|b| ctx.to_dense(b))
        .collect();
    for p in &mut dense {
        p.make_monic();
    }
    let refs: Vec<&DPoly> = dense.iter().collect();
    (0..dense.len()).into_par_iter().all(|i| {
        (i + 1..dense.len()).all(|j| {
            let lcm = dense[i].lm().lcm(dense[j].lm());
            let s = s_polynomial(&dense[i], &dense[j], &lcm, &ctx.order);
            reduce(s, &refs, &ctx.order, true).is_zero()
        })
    })
}

/// Whether `basis` is a reduced Gröbner basis: monic, no leading monomial
/// divides a monomial of another element, and Buchberger's criterion holds.
pub fn is_reduced_groebner_basis<V: Variable>(basis: &[Polynomial<V>], order: &MonomialOrder<V>) -> bool {
    for (i, g) in basis.iter().enumerate() {
        let Some((lc, lm)) = g.leading_term(order) else { return false };
        if !lc.is_one() {
            return false;
        }
        for (j, h) in basis.iter().enumerate() {
            if i != j && h.terms().iter().any(|(_, m)| lm.divides(m)) {
                return false;
            }
        }
    }
    is_groebner_basis(basis, order)
}
