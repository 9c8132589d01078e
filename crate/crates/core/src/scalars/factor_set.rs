use std::fmt;
use std::sync::Arc;

use num_traits::{One, Pow, Zero};

use super::rational::{rat, Rational};

type Cocycle = Arc<dyn Fn(i64, i64) -> Rational + Send + Sync>;

/// A factor set `c(α, β)` on the value group ℤ, twisting series multiplication.
#[derive(Clone)]
pub struct FactorSet {
    kind: Kind,
}

#[derive(Clone)]
enum Kind {
    Trivial,
    /// `c(α, β) = base^(αβ)`.
    Exponential(Rational),
    Custom(String, Cocycle),
}

impl FactorSet {
    pub fn trivial() -> Self {
        FactorSet { kind: Kind::Trivial }
    }

    pub fn exponential(base: Rational) -> Self {
        assert!(!base.is_zero(), "factor set values must be nonzero");
        FactorSet { kind: Kind::Exponential(base) }
    }

    /// Wraps an arbitrary cocycle. Nothing is checked here; see [`factor_set_check`].
    pub fn custom(name: &str, f: impl Fn(i64, i64) -> Rational + Send + Sync + 'static) -> Self {
        FactorSet { kind: Kind::Custom(name.to_string(), Arc::new(f)) }
    }

    pub fn is_trivial(&self) -> bool {
        match &self.kind {
            Kind::Trivial => true,
            Kind::Exponential(b) => b.is_one(),
            Kind::Custom(..) => false,
        }
    }

    pub fn eval(&self, a: i64, b: i64) -> Rational {
        match &self.kind {
            Kind::Trivial => Rational::one(),
            Kind::Exponential(base) => {
                let e = a.checked_mul(b).expect("factor set exponent overflow");
                if e >= 0 {
                    Pow::pow(base, e as u64)
                } else {
                    Pow::pow(base.recip(), e.unsigned_abs())
                }
            }
            Kind::Custom(_, f) => f(a, b),
        }
    }

    /// `c(α, β, η) = c(α, β) c(α+β, η)`.
    pub fn eval3(&self, a: i64, b: i64, e: i64) -> Rational {
        self.eval(a, b) * self.eval(a + b, e)
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::Trivial => "trivial".into(),
            Kind::Exponential(b) => format!("exponential({})", super::format_rational(b)),
            Kind::Custom(n, _) => n.clone(),
        }
    }
}

impl Default for FactorSet {
    fn default() -> Self {
        Self::trivial()
    }
}

impl fmt::Debug for FactorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FactorSet({})", self.name())
    }
}

/// Checks normalization, symmetry, nonvanishing and the cocycle identity on
/// all `|α|, |β|, |γ| ≤ range`.
pub fn factor_set_check(c: &FactorSet, range: i64) -> bool {
    assert!(range >= 1);
    let one = rat(1);
    for a in -range..=range {
        if c.eval(0, a) != one || c.eval(a, 0) != one {
            return false;
        }
        for b in -range..=range {
            let ab = c.eval(a, b);
            if ab.is_zero() || ab != c.eval(b, a) {
                return false;
            }
            for g in -range..=range {
                if ab.clone() * c.eval(a + b, g) != c.eval(a, b + g) * c.eval(b, g) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axioms() {
        assert!(factor_set_check(&FactorSet::trivial(), 5));
        assert!(factor_set_check(&FactorSet::exponential(rat(2)), 5));
        let bad = FactorSet::custom("a+b+1", |a, b| rat(a + b + 1));
        assert!(!factor_set_check(&bad, 2));
    }

    #[test]
    fn exponential_values() {
        let c = FactorSet::exponential(rat(2));
        assert_eq!(c.eval(1, 1), rat(2));
        assert_eq!(c.eval(2, 3), rat(64));
        assert_eq!(c.eval(-1, 2), super::super::ratio(1, 4));
        assert_eq!(c.eval3(1, 1, 1), rat(8));
    }
}
