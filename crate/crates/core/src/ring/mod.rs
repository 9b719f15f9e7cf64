//! Exact polynomial arithmetic and the ideal toolkit built on it.
//!
//! Everything here is generic over the indeterminate type; the causal layers
//! instantiate it with [`ParamId`](crate::parameterize::ParamId), while
//! [`Symbol`] covers ad hoc use.

mod groebner;
mod independence;
mod monomial;
mod order;
mod polynomial;
mod rational;

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

pub use groebner::{
    groebner_basis, groebner_basis_with_stats, is_groebner_basis, is_reduced_groebner_basis, normal_form, Budget,
    GroebnerStats,
};
pub use independence::independence_ideal;
pub use monomial::{Monomial, Symbol, Variable};
pub use order::MonomialOrder;
pub use polynomial::{FactorJson, ParsePolynomialError, Polynomial, TermJson};
pub use rational::{ParseRationalError, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RingError {
    /// The computation would exceed its resource budget; no partial result
    /// is ever returned.
    #[error("Gröbner basis computation intractable within budget: {reason} (after {pairs} S-pairs)")]
    Intractable { reason: String, pairs: usize },
    #[error("saturation by the zero polynomial")]
    SaturateByZero,
}

type BasisCache<V> = Arc<Mutex<Vec<(MonomialOrder<V>, Arc<Vec<Polynomial<V>>>)>>>;

/// A finitely generated polynomial ideal with lazily computed reduced
/// Gröbner bases, one per monomial order.
#[derive(Clone, Debug)]
pub struct Ideal<V: Variable> {
    generators: Vec<Polynomial<V>>,
    cache: BasisCache<V>,
}

impl<V: Variable> Ideal<V> {
    /// Zero generators are dropped.
    pub fn new(generators: impl IntoIterator<Item = Polynomial<V>>) -> Self {
        Ideal {
            generators: generators.into_iter().filter(|g| !g.is_zero()).collect(),
            cache: Arc::default(),
        }
    }

    pub fn zero() -> Self {
        Ideal::new([])
    }

    pub fn generators(&self) -> &[Polynomial<V>] {
        &self.generators
    }

    pub fn into_generators(self) -> Vec<Polynomial<V>> {
        self.generators
    }

    pub fn variables(&self) -> BTreeSet<V> {
        self.generators.iter().flat_map(|g| g.variables()).collect()
    }

    fn cached(&self, order: &MonomialOrder<V>) -> Option<Arc<Vec<Polynomial<V>>>> {
        let cache = self.cache.lock().unwrap();
        cache.iter().find(|(o, _)| o == order).map(|(_, b)| Arc::clone(b))
    }

    fn seed(&self, order: MonomialOrder<V>, basis: Vec<Polynomial<V>>) {
        self.cache.lock().unwrap().push((order, Arc::new(basis)));
    }

    /// The reduced Gröbner basis under `order`, computed once and cached.
    pub fn groebner(&self, order: &MonomialOrder<V>, budget: &Budget) -> Result<Arc<Vec<Polynomial<V>>>, RingError> {
        if let Some(b) = self.cached(order) {
            return Ok(b);
        }
        let basis = groebner_basis(&self.generators, order, budget)?;
        let basis = Arc::new(basis);
        self.cache.lock().unwrap().push((order.clone(), Arc::clone(&basis)));
        Ok(basis)
    }

    pub fn contains(&self, f: &Polynomial<V>, order: &MonomialOrder<V>, budget: &Budget) -> Result<bool, RingError> {
        if f.is_zero() {
            return Ok(true);
        }
        let basis = self.groebner(order, budget)?;
        Ok(normal_form(f, &basis, order).is_zero())
    }

    pub fn contains_all(
        &self,
        fs: &[Polynomial<V>],
        order: &MonomialOrder<V>,
        budget: &Budget,
    ) -> Result<bool, RingError> {
        let basis = self.groebner(order, budget)?;
        Ok(fs.iter().all(|f| normal_form(f, &basis, order).is_zero()))
    }

    /// Ideal equality via identical reduced bases.
    pub fn equals(&self, other: &Ideal<V>, order: &MonomialOrder<V>, budget: &Budget) -> Result<bool, RingError> {
        Ok(self.groebner(order, budget)? == other.groebner(order, budget)?)
    }

    pub fn sum(&self, other: &Ideal<V>) -> Ideal<V> {
        Ideal::new(self.generators.iter().chain(other.generators.iter()).cloned())
    }

    pub fn is_unit(&self, budget: &Budget) -> Result<bool, RingError> {
        let b = self.groebner(&MonomialOrder::GrevLex, budget)?;
        Ok(b.len() == 1 && b[0].is_constant())
    }

    /// `I ∩ k[remaining variables]`, from a block-order basis.
    ///
    /// The returned generators are the reduced GrevLex basis of the
    /// elimination ideal; it is cached on the result.
    pub fn eliminate(&self, drop: &BTreeSet<V>, budget: &Budget) -> Result<Ideal<V>, RingError> {
        let order = MonomialOrder::elimination(drop.iter().cloned());
        let basis = self.groebner(&order, budget)?;
        let kept: Vec<Polynomial<V>> = basis
            .iter()
            .filter(|g| !g.variables().iter().any(|v| drop.contains(v)))
            .cloned()
            .collect();
        let out = Ideal::new(kept.clone());
        out.seed(MonomialOrder::GrevLex, kept);
        Ok(out)
    }

    /// `I : f^∞`, by adjoining `y·f − 1` and eliminating `y`.
    pub fn saturate(&self, f: &Polynomial<V>, budget: &Budget) -> Result<Ideal<V>, RingError> {
        if f.is_zero() {
            return Err(RingError::SaturateByZero);
        }
        if f.is_constant() {
            return Ok(self.clone());
        }
        let used: BTreeSet<V> = self.variables().into_iter().chain(f.variables()).collect();
        let y = (0..).map(V::auxiliary).find(|v| !used.contains(v)).unwrap();
        let rabinowitsch = &Polynomial::var(y.clone()) * f - Polynomial::one();
        let extended = Ideal::new(self.generators.iter().cloned().chain([rabinowitsch]));
        extended.eliminate(&BTreeSet::from([y]), budget)
    }

    /// `I : (f1·…·fk)^∞`, one factor at a time.
    pub fn saturate_by_product(&self, factors: &[Polynomial<V>], budget: &Budget) -> Result<Ideal<V>, RingError> {
        let mut current = self.clone();
        for f in factors {
            current = current.saturate(f, budget)?;
        }
        Ok(current)
    }
}

/// Reduced Gröbner basis of `ideal` as an ideal whose generators are that
/// basis.
pub fn groebner<V: Variable>(ideal: &Ideal<V>, order: &MonomialOrder<V>, budget: &Budget) -> Result<Ideal<V>, RingError> {
    let basis = ideal.groebner(order, budget)?;
    let out = Ideal::new(basis.iter().cloned());
    out.seed(order.clone(), basis.to_vec());
    Ok(out)
}

pub fn elimination_ideal<V: Variable>(ideal: &Ideal<V>, drop: &BTreeSet<V>, budget: &Budget) -> Result<Ideal<V>, RingError> {
    ideal.eliminate(drop, budget)
}

pub fn saturate<V: Variable>(ideal: &Ideal<V>, f: &Polynomial<V>, budget: &Budget) -> Result<Ideal<V>, RingError> {
    ideal.saturate(f, budget)
}

pub fn ideal_sum<V: Variable>(a: &Ideal<V>, b: &Ideal<V>) -> Ideal<V> {
    a.sum(b)
}

pub fn contains<V: Variable>(
    ideal: &Ideal<V>,
    f: &Polynomial<V>,
    order: &MonomialOrder<V>,
    budget: &Budget,
) -> Result<bool, RingError> {
    ideal.contains(f, order, budget)
}

pub fn ideal_equal<V: Variable>(
    a: &Ideal<V>,
    b: &Ideal<V>,
    order: &MonomialOrder<V>,
    budget: &Budget,
) -> Result<bool, RingError> {
    a.equals(b, order, budget)
}

/// Smallest `n ≤ max_n` with `f^n · g ∈ I`, if any.
pub fn saturation_exponent<V: Variable>(
    ideal: &Ideal<V>,
    f: &Polynomial<V>,
    g: &Polynomial<V>,
    max_n: u32,
    budget: &Budget,
) -> Result<Option<u32>, RingError> {
    let mut power = g.clone();
    for n in 0..=max_n {
        if ideal.contains(&power, &MonomialOrder::GrevLex, budget)? {
            return Ok(Some(n));
        }
        power = &power * f;
    }
    Ok(None)
}
