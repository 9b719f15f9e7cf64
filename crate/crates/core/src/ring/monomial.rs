use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

/// A polynomial indeterminate.
///
/// Variables that sort first under `Ord` rank highest in every monomial
/// order, the usual `x1 > x2 > ...` convention.
pub trait Variable: Clone + Ord + Hash + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// A fresh auxiliary variable, distinct for distinct indices. Used for
    /// the Rabinowitsch variable of a saturation.
    fn auxiliary(index: usize) -> Self;
}

/// A power product with sparse exponents, sorted by variable.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial<V> {
    factors: Vec<(V, u32)>,
}

impl<V: Ord + Clone> Monomial<V> {
    pub fn one() -> Self {
        Monomial { factors: Vec::new() }
    }

    pub fn var(v: V) -> Self {
        Monomial { factors: vec![(v, 1)] }
    }

    /// Builds from arbitrary `(variable, exponent)` pairs, merging repeats
    /// and dropping zero exponents.
    pub fn from_factors(factors: impl IntoIterator<Item = (V, u32)>) -> Self {
        let mut fs: Vec<(V, u32)> = factors.into_iter().filter(|(_, e)| *e > 0).collect();
        fs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(V, u32)> = Vec::with_capacity(fs.len());
        for (v, e) in fs {
            match out.last_mut() {
                Some((last, acc)) if *last == v => *acc += e,
                _ => out.push((v, e)),
            }
        }
        Monomial { factors: out }
    }

    pub fn factors(&self) -> &[(V, u32)] {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, v: &V) -> u32 {
        self.factors
            .binary_search_by(|(w, _)| w.cmp(v))
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    pub fn variables(&self) -> impl Iterator<Item = &V> {
        self.factors.iter().map(|(v, _)| v)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (a, b) = (&self.factors[i], &other.factors[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => {
                    out.push(a.clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b.clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a.0.clone(), a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.factors[i..]);
        out.extend_from_slice(&other.factors[j..]);
        Monomial { factors: out }
    }

    pub fn divides(&self, other: &Self) -> bool {
        self.factors.iter().all(|(v, e)| other.exponent(v) >= *e)
    }

    /// `other / self` when `self` divides `other`.
    pub fn quotient_of(&self, other: &Self) -> Option<Self> {
        if !self.divides(other) {
            return None;
        }
        Some(Monomial::from_factors(
            other.factors.iter().map(|(v, e)| (v.clone(), e - self.exponent(v))),
        ))
    }

    pub fn lcm(&self, other: &Self) -> Self {
        let vars = self.factors.iter().chain(other.factors.iter()).map(|(v, _)| v.clone());
        Monomial::from_factors(
            vars.collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .map(|v| {
                    let e = self.exponent(&v).max(other.exponent(&v));
                    (v, e)
                }),
        )
    }
}

impl<V: fmt::Display> fmt::Display for Monomial<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (k, (v, e)) in self.factors.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// A general-purpose named indeterminate, for working with the ring
/// independently of causal parameters.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Symbol(pub String);

impl Symbol {
    pub fn new(name: impl Into<String>) -> Self {
        Symbol(name.into())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for Symbol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let ok = !s.is_empty()
            && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '~')
            && !s.chars().next().unwrap().is_ascii_digit();
        if ok {
            Ok(Symbol(s.to_string()))
        } else {
            Err(format!("invalid symbol `{s}`"))
        }
    }
}

impl Variable for Symbol {
    fn auxiliary(index: usize) -> Self {
        Symbol(format!("~aux{index}"))
    }
}
