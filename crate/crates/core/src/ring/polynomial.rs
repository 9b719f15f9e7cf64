use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::monomial::{Monomial, Variable};
use super::order::MonomialOrder;
use super::rational::Rational;

/// A sparse multivariate polynomial with exact rational coefficients.
///
/// Terms are stored in decreasing GrevLex order with no zero coefficients,
/// so two polynomials are equal iff their term lists are equal.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Polynomial<V> {
    terms: Vec<(Rational, Monomial<V>)>,
}

impl<V: Variable> Polynomial<V> {
    pub fn zero() -> Self {
        Polynomial { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_terms([(c, Monomial::one())])
    }

    pub fn var(v: V) -> Self {
        Self::from_terms([(Rational::one(), Monomial::var(v))])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Rational, Monomial<V>)>) -> Self {
        let mut ts: Vec<(Rational, Monomial<V>)> = terms.into_iter().collect();
        let order = MonomialOrder::GrevLex;
        ts.sort_by(|a, b| order.cmp(&b.1, &a.1));
        let mut out: Vec<(Rational, Monomial<V>)> = Vec::with_capacity(ts.len());
        for (c, m) in ts {
            match out.last_mut() {
                Some((acc, last)) if *last == m => *acc = &*acc + &c,
                _ => out.push((c, m)),
            }
        }
        out.retain(|(c, _)| !c.is_zero());
        Polynomial { terms: out }
    }

    /// Sum of the given variables, each with coefficient one.
    pub fn sum_of(vars: impl IntoIterator<Item = V>) -> Self {
        Self::from_terms(vars.into_iter().map(|v| (Rational::one(), Monomial::var(v))))
    }

    /// Product of the given variables.
    pub fn product_of(vars: impl IntoIterator<Item = V>) -> Self {
        Self::from_terms([(Rational::one(), Monomial::from_factors(vars.into_iter().map(|v| (v, 1))))])
    }

    pub fn terms(&self) -> &[(Rational, Monomial<V>)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(_, m)| m.is_one())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(_, m)| m.degree()).max().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<V> {
        self.terms.iter().flat_map(|(_, m)| m.variables().cloned()).collect()
    }

    pub fn mentions(&self, v: &V) -> bool {
        self.terms.iter().any(|(_, m)| m.exponent(v) > 0)
    }

    /// Terms sorted decreasingly under `order`.
    pub fn sorted_terms(&self, order: &MonomialOrder<V>) -> Vec<(Rational, Monomial<V>)> {
        let mut ts = self.terms.clone();
        ts.sort_by(|a, b| order.cmp(&b.1, &a.1));
        ts
    }

    pub fn leading_term(&self, order: &MonomialOrder<V>) -> Option<(Rational, Monomial<V>)> {
        self.terms
            .iter()
            .max_by(|a, b| order.cmp(&a.1, &b.1))
            .cloned()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Polynomial { terms: self.terms.iter().map(|(k, m)| (k * c, m.clone())).collect() }
    }

    /// Divides by the leading coefficient under `order`.
    pub fn monic(&self, order: &MonomialOrder<V>) -> Self {
        match self.leading_term(order) {
            Some((c, _)) => self.scale(&c.recip()),
            None => Self::zero(),
        }
    }

    pub fn mul_monomial(&self, c: &Rational, m: &Monomial<V>) -> Self {
        Self::from_terms(self.terms.iter().map(|(k, n)| (k * c, n.mul(m))))
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Substitutes `lookup(v)` for every variable.
    pub fn eval_with<E>(&self, mut lookup: impl FnMut(&V) -> Result<Rational, E>) -> Result<Rational, E> {
        let mut total = Rational::zero();
        for (c, m) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.factors() {
                t = &t * &lookup(v)?.pow(*e);
            }
            total = &total + &t;
        }
        Ok(total)
    }

    /// Floating-point evaluation.
    pub fn eval_f64_with<E>(&self, mut lookup: impl FnMut(&V) -> Result<f64, E>) -> Result<f64, E> {
        let mut total = 0.0;
        for (c, m) in &self.terms {
            let mut t = c.to_f64();
            for (v, e) in m.factors() {
                t *= lookup(v)?.powi(*e as i32);
            }
            total += t;
        }
        Ok(total)
    }

    /// Replaces each variable by a polynomial (or keeps it when `subst`
    /// returns `None`).
    pub fn substitute(&self, mut subst: impl FnMut(&V) -> Option<Polynomial<V>>) -> Self {
        let mut total = Self::zero();
        for (c, m) in &self.terms {
            let mut t = Self::constant(c.clone());
            for (v, e) in m.factors() {
                let base = subst(v).unwrap_or_else(|| Self::var(v.clone()));
                t = &t * &base.pow(*e);
            }
            total = &total + &t;
        }
        total
    }

    /// Renames variables; the map must be injective on the variables used.
    pub fn map_vars<W: Variable>(&self, mut f: impl FnMut(&V) -> W) -> Polynomial<W> {
        Polynomial::from_terms(self.terms.iter().map(|(c, m)| {
            (c.clone(), Monomial::from_factors(m.factors().iter().map(|(v, e)| (f(v), *e))))
        }))
    }

    /// Text rendering with terms in decreasing `order`.
    pub fn to_string_with(&self, order: &MonomialOrder<V>) -> String {
        render(&self.sorted_terms(order))
    }

    fn merge(&self, other: &Self, negate: bool) -> Self {
        let order = MonomialOrder::GrevLex;
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let sign = |c: &Rational| if negate { -c } else { c.clone() };
        while i < self.terms.len() && j < other.terms.len() {
            let (a, b) = (&self.terms[i], &other.terms[j]);
            match order.cmp(&a.1, &b.1) {
                Ordering::Greater => {
                    out.push(a.clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push((sign(&b.0), b.1.clone()));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate { &a.0 - &b.0 } else { &a.0 + &b.0 };
                    if !c.is_zero() {
                        out.push((c, a.1.clone()));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(self.terms[i..].iter().cloned());
        out.extend(other.terms[j..].iter().map(|(c, m)| (sign(c), m.clone())));
        Polynomial { terms: out }
    }
}

fn render<V: fmt::Display + Ord + Clone>(terms: &[(Rational, Monomial<V>)]) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut s = String::new();
    for (k, (c, m)) in terms.iter().enumerate() {
        let negative = c.is_negative();
        let abs = c.abs();
        if k == 0 {
            if negative {
                s.push('-');
            }
        } else {
            s.push_str(if negative { " - " } else { " + " });
        }
        if m.is_one() {
            s.push_str(&abs.to_string());
        } else if abs.is_one() {
            s.push_str(&m.to_string());
        } else {
            s.push_str(&format!("{abs}*{m}"));
        }
    }
    s
}

impl<V: Variable> fmt::Display for Polynomial<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(&self.terms))
    }
}

impl<V: Variable> Add for &Polynomial<V> {
    type Output = Polynomial<V>;
    fn add(self, rhs: Self) -> Polynomial<V> {
        self.merge(rhs, false)
    }
}

impl<V: Variable> Sub for &Polynomial<V> {
    type Output = Polynomial<V>;
    fn sub(self, rhs: Self) -> Polynomial<V> {
        self.merge(rhs, true)
    }
}

impl<V: Variable> Neg for &Polynomial<V> {
    type Output = Polynomial<V>;
    fn neg(self) -> Polynomial<V> {
        Polynomial { terms: self.terms.iter().map(|(c, m)| (-c, m.clone())).collect() }
    }
}

impl<V: Variable> Mul for &Polynomial<V> {
    type Output = Polynomial<V>;
    fn mul(self, rhs: Self) -> Polynomial<V> {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (a, m) in &self.terms {
            for (b, n) in &rhs.terms {
                terms.push((a * b, m.mul(n)));
            }
        }
        Polynomial::from_terms(terms)
    }
}

macro_rules! owned_ops {
    ($($tr:ident $method:ident),*) => {$(
        impl<V: Variable> $tr for Polynomial<V> {
            type Output = Polynomial<V>;
            fn $method(self, rhs: Self) -> Polynomial<V> {
                (&self).$method(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl<V: Variable> Neg for Polynomial<V> {
    type Output = Polynomial<V>;
    fn neg(self) -> Polynomial<V> {
        -&self
    }
}

impl<V: Variable> std::iter::Sum for Polynomial<V> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        // Collecting terms once beats repeated merging for long sums.
        Polynomial::from_terms(iter.flat_map(|p| p.terms))
    }
}

impl<V: Variable> std::iter::Product for Polynomial<V> {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Polynomial::one(), |a, b| &a * &b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse polynomial at `{fragment}`: {reason}")]
pub struct ParsePolynomialError {
    pub fragment: String,
    pub reason: String,
}

impl<V> FromStr for Polynomial<V>
where
    V: Variable + FromStr,
    V::Err: fmt::Display,
{
    type Err = ParsePolynomialError;

    /// Parses the canonical text form: terms joined by ` + `/` - `, each a
    /// `*`-separated list of an optional rational coefficient and
    /// `var` or `var^k` factors. Brackets nest, so variable names such as
    /// `p[|V1=1,V2=2]` may contain operator characters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |fragment: &str, reason: String| ParsePolynomialError {
            fragment: fragment.to_string(),
            reason,
        };
        let mut terms = Vec::new();
        for (negative, raw) in split_terms(s).map_err(|r| err(s, r))? {
            let raw = raw.trim();
            if raw.is_empty() {
                return Err(err(s, "empty term".into()));
            }
            let mut coef = if negative { -Rational::one() } else { Rational::one() };
            let mut factors = Vec::new();
            for piece in split_top(raw, '*') {
                let piece = piece.trim();
                if piece.starts_with(|c: char| c.is_ascii_digit()) {
                    let c: Rational = piece.parse().map_err(|e: super::rational::ParseRationalError| err(piece, e.to_string()))?;
                    coef = &coef * &c;
                    continue;
                }
                let (name, exp) = match split_top(piece, '^').as_slice() {
                    [name] => (*name, 1),
                    [name, e] => (*name, e.trim().parse::<u32>().map_err(|e| err(piece, e.to_string()))?),
                    _ => return Err(err(piece, "repeated `^`".into())),
                };
                let v: V = name.trim().parse().map_err(|e: V::Err| err(name, e.to_string()))?;
                factors.push((v, exp));
            }
            terms.push((coef, Monomial::from_factors(factors)));
        }
        Ok(Polynomial::from_terms(terms))
    }
}

fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn split_terms(s: &str) -> Result<Vec<(bool, &str)>, String> {
    let s = s.trim();
    if s == "0" {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut negative = false;
    let mut start = 0;
    let bytes: Vec<(usize, char)> = s.char_indices().collect();
    for (k, &(i, c)) in bytes.iter().enumerate() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            '+' | '-' if depth == 0 => {
                // exponent or coefficient signs never appear unbracketed
                let prev = s[..i].trim_end();
                if prev.is_empty() {
                    if k == 0 {
                        negative = c == '-';
                        start = i + 1;
                        continue;
                    }
                } else if !prev.ends_with('^') {
                    out.push((negative, &s[start..i]));
                    negative = c == '-';
                    start = i + 1;
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced brackets".into());
    }
    out.push((negative, &s[start..]));
    Ok(out)
}

/// JSON form of one term: `{coef, factors: [{param, exp}]}`.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct TermJson<P> {
    pub coef: Rational,
    pub factors: Vec<FactorJson<P>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct FactorJson<P> {
    pub param: P,
    pub exp: u32,
}

impl<V: Variable> Polynomial<V> {
    pub fn to_json_terms(&self, order: &MonomialOrder<V>) -> Vec<TermJson<V>> {
        self.sorted_terms(order)
            .into_iter()
            .map(|(coef, m)| TermJson {
                coef,
                factors: m
                    .factors()
                    .iter()
                    .map(|(v, e)| FactorJson { param: v.clone(), exp: *e })
                    .collect(),
            })
            .collect()
    }

    pub fn from_json_terms(terms: Vec<TermJson<V>>) -> Self {
        Polynomial::from_terms(terms.into_iter().map(|t| {
            (t.coef, Monomial::from_factors(t.factors.into_iter().map(|f| (f.param, f.exp))))
        }))
    }
}
