use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::monomial::Monomial;

/// An admissible monomial order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MonomialOrder<V> {
    Lex,
    GrevLex,
    /// Compares the exponents of `eliminate` under `inner` first, then the
    /// remaining exponents under `outer`. Any monomial containing an
    /// eliminated variable is larger than every monomial free of them.
    Block {
        eliminate: BTreeSet<V>,
        inner: Box<MonomialOrder<V>>,
        outer: Box<MonomialOrder<V>>,
    },
}

impl<V: Ord + Clone> MonomialOrder<V> {
    /// The default elimination order: GrevLex inside both blocks.
    pub fn elimination(eliminate: impl IntoIterator<Item = V>) -> Self {
        MonomialOrder::Block {
            eliminate: eliminate.into_iter().collect(),
            inner: Box::new(MonomialOrder::GrevLex),
            outer: Box::new(MonomialOrder::GrevLex),
        }
    }

    pub fn cmp(&self, a: &Monomial<V>, b: &Monomial<V>) -> Ordering {
        match self {
            MonomialOrder::Lex => lex(a.factors(), b.factors()),
            MonomialOrder::GrevLex => grevlex(a.factors(), b.factors()),
            MonomialOrder::Block { eliminate, inner, outer } => {
                let (a_in, a_out) = split(a, eliminate);
                let (b_in, b_out) = split(b, eliminate);
                inner.cmp(&a_in, &b_in).then_with(|| outer.cmp(&a_out, &b_out))
            }
        }
    }

    /// Lays `vars` out so each block occupies a contiguous index range and
    /// returns the permuted variables with the matching dense order.
    pub(crate) fn compile(&self, vars: &[V]) -> (Vec<V>, DenseOrder) {
        match self {
            MonomialOrder::Lex => (vars.to_vec(), DenseOrder::Lex),
            MonomialOrder::GrevLex => (vars.to_vec(), DenseOrder::GrevLex),
            MonomialOrder::Block { eliminate, inner, outer } => {
                let (elim, rest): (Vec<V>, Vec<V>) =
                    vars.iter().cloned().partition(|v| eliminate.contains(v));
                let (mut first_vars, first) = inner.compile(&elim);
                let (second_vars, second) = outer.compile(&rest);
                let split = first_vars.len();
                first_vars.extend(second_vars);
                (
                    first_vars,
                    DenseOrder::Block { split, first: Box::new(first), second: Box::new(second) },
                )
            }
        }
    }
}

fn split<V: Ord + Clone>(m: &Monomial<V>, eliminate: &BTreeSet<V>) -> (Monomial<V>, Monomial<V>) {
    let (a, b): (Vec<_>, Vec<_>) =
        m.factors().iter().cloned().partition(|(v, _)| eliminate.contains(v));
    (Monomial::from_factors(a), Monomial::from_factors(b))
}

fn lex<V: Ord>(a: &[(V, u32)], b: &[(V, u32)]) -> Ordering {
    // Factors are sorted with the highest-ranked variable first.
    for (x, y) in a.iter().zip(b.iter()) {
        match x.0.cmp(&y.0) {
            // `a` has a higher-ranked variable with positive exponent
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
            Ordering::Equal => match x.1.cmp(&y.1) {
                Ordering::Equal => {}
                other => return other,
            },
        }
    }
    a.len().cmp(&b.len())
}

fn grevlex<V: Ord>(a: &[(V, u32)], b: &[(V, u32)]) -> Ordering {
    let da: u32 = a.iter().map(|f| f.1).sum();
    let db: u32 = b.iter().map(|f| f.1).sum();
    if da != db {
        return da.cmp(&db);
    }
    // Scan from the lowest-ranked variable; a smaller exponent there wins.
    let (mut i, mut j) = (a.len(), b.len());
    while i > 0 && j > 0 {
        let (x, y) = (&a[i - 1], &b[j - 1]);
        match x.0.cmp(&y.0) {
            // `x` is ranked higher, so `b` has positive exponent in `y.0`
            // where `a` has zero.
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
            Ordering::Equal => {
                if x.1 != y.1 {
                    return y.1.cmp(&x.1);
                }
                i -= 1;
                j -= 1;
            }
        }
    }
    Ordering::Equal
}

/// Monomial order over dense exponent vectors where index 0 is the highest
/// ranked variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum DenseOrder {
    Lex,
    GrevLex,
    Block { split: usize, first: Box<DenseOrder>, second: Box<DenseOrder> },
}

impl DenseOrder {
    pub(crate) fn cmp(&self, a: &[u16], b: &[u16]) -> Ordering {
        match self {
            DenseOrder::Lex => a.cmp(b),
            DenseOrder::GrevLex => {
                let da: u32 = a.iter().map(|&e| e as u32).sum();
                let db: u32 = b.iter().map(|&e| e as u32).sum();
                da.cmp(&db).then_with(|| {
                    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
                        if x != y {
                            return y.cmp(x);
                        }
                    }
                    Ordering::Equal
                })
            }
            DenseOrder::Block { split, first, second } => first
                .cmp(&a[..*split], &b[..*split])
                .then_with(|| second.cmp(&a[*split..], &b[*split..])),
        }
    }
}
