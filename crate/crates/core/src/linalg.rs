//! Vectors of c₀ over K: the bilinear form, sup norm, Gram–Schmidt,
//! normal projections, orthogonality tests and volumes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalars::{min_opt, rat, LaurentSeries, Rational, ScalarError, Valuation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("vectors are linearly dependent (to working precision)")]
    LinearlyDependent,
    #[error("precision exhausted")]
    PrecisionExhausted,
    #[error("empty family")]
    EmptyFamily,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// A finitely supported vector of c₀. Indices start at 1.
///
/// Absent indices are zero to the ambient precision (`None` = exactly zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorC0 {
    entries: BTreeMap<usize, LaurentSeries>,
    ambient: Option<i64>,
}

impl VectorC0 {
    pub fn zero() -> Self {
        VectorC0 { entries: BTreeMap::new(), ambient: None }
    }

    /// The canonical vector `e_i`.
    pub fn basis(i: usize) -> Self {
        Self::from_entries([(i, LaurentSeries::one())])
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (usize, LaurentSeries)>) -> Self {
        let mut v = Self::zero();
        for (i, s) in entries {
            assert!(i >= 1, "c0 indices start at 1");
            v.set(i, s);
        }
        v
    }

    /// Dense constructor: `xs[k]` becomes entry `k + 1`.
    pub fn from_dense(xs: &[LaurentSeries]) -> Self {
        Self::from_entries(xs.iter().cloned().enumerate().map(|(k, s)| (k + 1, s)))
    }

    /// Lowers the ambient precision (the precision of absent entries).
    pub fn with_ambient(mut self, prec: Option<i64>) -> Self {
        self.ambient = min_opt(self.ambient, prec);
        self
    }

    fn set(&mut self, i: usize, s: LaurentSeries) {
        if s.is_zero_to_precision() {
            self.entries.remove(&i);
            self.ambient = min_opt(self.ambient, s.precision());
        } else {
            self.entries.insert(i, s);
        }
    }

    pub fn get(&self, i: usize) -> LaurentSeries {
        self.entries.get(&i).cloned().unwrap_or_else(|| self.absent())
    }

    fn absent(&self) -> LaurentSeries {
        match self.ambient {
            None => LaurentSeries::zero(),
            Some(p) => LaurentSeries::zero_to(p),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &LaurentSeries)> + '_ {
        self.entries.iter().map(|(i, s)| (*i, s))
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.entries.keys().copied().collect()
    }

    pub fn ambient_precision(&self) -> Option<i64> {
        self.ambient
    }

    /// Lowest precision among the entries and the ambient zero.
    pub fn precision(&self) -> Option<i64> {
        self.entries.values().fold(self.ambient, |p, s| min_opt(p, s.precision()))
    }

    pub fn max_index(&self) -> usize {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_zero_to_precision(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &Self, f: impl Fn(&LaurentSeries, &LaurentSeries) -> LaurentSeries) -> Self {
        let mut out = VectorC0 { entries: BTreeMap::new(), ambient: min_opt(self.ambient, other.ambient) };
        let idx: BTreeSet<usize> = self.entries.keys().chain(other.entries.keys()).copied().collect();
        for i in idx {
            out.set(i, f(&self.get(i), &other.get(i)));
        }
        out
    }

    /// Scalar multiple `λ·x`.
    pub fn scale(&self, lambda: &LaurentSeries) -> Self {
        if lambda.is_exact() && lambda.is_zero_to_precision() {
            return Self::zero();
        }
        let shift = lambda.valuation().lower_bound();
        let ambient = match (self.ambient, shift) {
            (Some(p), Some(s)) => Some(p + s),
            (Some(_), None) => None,
            (None, _) => None,
        };
        let mut out = VectorC0 { entries: BTreeMap::new(), ambient };
        for (i, s) in &self.entries {
            out.set(*i, s * lambda);
        }
        out
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        self.scale(&LaurentSeries::constant(q.clone()))
    }

    pub fn truncate(&self, n: i64) -> Self {
        let mut out = VectorC0 { entries: BTreeMap::new(), ambient: min_opt(self.ambient, Some(n)) };
        for (i, s) in &self.entries {
            out.set(*i, s.truncate(n));
        }
        out
    }

    /// True when every entry vanishes below `t^n`.
    pub fn vanishes_below(&self, n: i64) -> bool {
        self.entries.values().all(|s| s.vanishes_below(n)) && self.ambient.is_none_or(|p| p >= n)
    }
}

impl fmt::Display for VectorC0 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (i, s)) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}: {s}")?;
        }
        write!(f, "}}")
    }
}

impl FromStr for VectorC0 {
    type Err = ScalarError;

    /// `{index: series, ...}`
    fn from_str(s: &str) -> Result<Self, ScalarError> {
        let err = |m: &str| ScalarError::Parse(format!("{m} in vector `{s}`"));
        let body = s
            .trim()
            .strip_prefix('{')
            .and_then(|x| x.strip_suffix('}'))
            .ok_or_else(|| err("expected braces"))?
            .trim();
        let mut v = VectorC0::zero();
        if body.is_empty() {
            return Ok(v);
        }
        for item in body.split(',') {
            let (i, series) = item.split_once(':').ok_or_else(|| err("expected `index: series`"))?;
            let i: usize = i.trim().parse().map_err(|_| err("bad index"))?;
            if i == 0 || v.entries.contains_key(&i) {
                return Err(err("index must be positive and unique"));
            }
            v.set(i, series.trim().parse()?);
        }
        Ok(v)
    }
}

/// `⟨x, y⟩ = Σ xₙyₙ`.
pub fn inner(x: &VectorC0, y: &VectorC0) -> LaurentSeries {
    let mut acc = match (x.ambient, y.ambient) {
        (Some(p), Some(q)) => LaurentSeries::zero_to(p + q),
        _ => LaurentSeries::zero(),
    };
    let idx: BTreeSet<usize> = x.entries.keys().chain(y.entries.keys()).copied().collect();
    for i in idx {
        acc = &acc + &(&x.get(i) * &y.get(i));
    }
    acc
}

/// `‖x‖` as a valuation: the minimum entry valuation.
pub fn sup_norm_val(x: &VectorC0) -> Result<Valuation, LinalgError> {
    let known = x.entries.values().filter_map(|s| s.valuation().finite()).min();
    match (known, x.ambient) {
        (None, None) => Ok(Valuation::Infinite),
        (None, Some(p)) => Ok(Valuation::Unknown(p)),
        (Some(v), Some(p)) if p <= v => Err(LinalgError::PrecisionExhausted),
        (Some(v), _) => Ok(Valuation::Finite(v)),
    }
}

/// `‖x‖` as a valuation, with entries known only to precision reported as
/// [`Valuation::Unknown`] rather than an error.
pub fn norm_val(x: &VectorC0) -> Valuation {
    let init = x.ambient.map_or(Valuation::Infinite, Valuation::Unknown);
    x.entries.values().fold(init, |acc, s| acc.min_norm(s.valuation()))
}

/// `‖x‖² = |⟨x, x⟩|`, compared as valuations.
pub fn check_norm_inner(x: &VectorC0) -> bool {
    match (sup_norm_val(x), inner(x, x).valuation()) {
        (Ok(Valuation::Finite(a)), Valuation::Finite(b)) => 2 * a == b,
        _ => false,
    }
}

/// Pairwise ⟨,⟩-orthogonal family with cached self inner products.
#[derive(Clone, Debug)]
pub struct OrthoBasis {
    pub vectors: Vec<VectorC0>,
    pub self_inner: Vec<LaurentSeries>,
}

impl OrthoBasis {
    pub fn empty() -> Self {
        OrthoBasis { vectors: Vec::new(), self_inner: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Adopts an already orthogonal family without re-orthogonalizing it.
    pub fn from_orthogonal(vectors: Vec<VectorC0>) -> Result<Self, LinalgError> {
        let mut self_inner = Vec::with_capacity(vectors.len());
        for v in &vectors {
            let s = inner(v, v);
            match s.valuation() {
                Valuation::Finite(_) => self_inner.push(s),
                Valuation::Infinite => return Err(LinalgError::LinearlyDependent),
                Valuation::Unknown(_) => return Err(LinalgError::PrecisionExhausted),
            }
        }
        Ok(OrthoBasis { vectors, self_inner })
    }

    /// `x − Σ ⟨x, xᵢ⟩/⟨xᵢ, xᵢ⟩ xᵢ`.
    fn residual(&self, x: &VectorC0) -> Result<VectorC0, LinalgError> {
        Ok(x.sub(&self.project(x)?))
    }

    fn project(&self, x: &VectorC0) -> Result<VectorC0, LinalgError> {
        let mut p = VectorC0::zero();
        for (xi, si) in self.vectors.iter().zip(&self.self_inner) {
            let coef = &inner(x, xi) * &si.inv()?;
            p = p.add(&xi.scale(&coef));
        }
        Ok(p)
    }

    // Appends the residual of `v`; `Ok(false)` if it vanishes to precision.
    fn push_residual(&mut self, v: &VectorC0) -> Result<Option<VectorC0>, LinalgError> {
        let r = self.residual(v)?;
        if r.is_zero_to_precision() {
            return Ok(None);
        }
        let s = inner(&r, &r);
        if s.valuation().finite().is_none() {
            return Err(LinalgError::PrecisionExhausted);
        }
        self.vectors.push(r.clone());
        self.self_inner.push(s);
        Ok(Some(r))
    }
}

/// Classical Gram–Schmidt with the bilinear form; no normalization.
pub fn gram_schmidt(vs: &[VectorC0]) -> Result<OrthoBasis, LinalgError> {
    let mut b = OrthoBasis::empty();
    for v in vs {
        if b.push_residual(v)?.is_none() {
            return Err(LinalgError::LinearlyDependent);
        }
    }
    Ok(b)
}

/// Orthogonal basis of `span(vs)`, silently skipping dependent members.
pub fn span_basis(vs: &[VectorC0]) -> Result<OrthoBasis, LinalgError> {
    let mut b = OrthoBasis::empty();
    for v in vs {
        b.push_residual(v)?;
    }
    Ok(b)
}

/// `P(x) = Σ ⟨x, xᵢ⟩/⟨xᵢ, xᵢ⟩ xᵢ`.
pub fn normal_projection(b: &OrthoBasis, x: &VectorC0) -> Result<VectorC0, LinalgError> {
    b.project(x)
}

/// Distance from `x` to `span(vs)` as a valuation.
pub fn dist_to_span(x: &VectorC0, vs: &[VectorC0]) -> Result<Valuation, LinalgError> {
    let b = span_basis(vs)?;
    sup_norm_val(&b.residual(x)?)
}

/// `Vol(x₁,…,xₙ) = ∏ dist(xᵢ, [xⱼ : j < i])`, as a sum of valuations.
pub fn volume(vs: &[VectorC0]) -> Result<Valuation, LinalgError> {
    if vs.is_empty() {
        return Err(LinalgError::EmptyFamily);
    }
    let mut b = OrthoBasis::empty();
    let mut total = 0i64;
    let mut unknown = false;
    for v in vs {
        let r = b.residual(v)?;
        match sup_norm_val(&r)? {
            Valuation::Infinite => return Ok(Valuation::Infinite),
            Valuation::Unknown(n) => {
                unknown = true;
                total += n;
                continue;
            }
            Valuation::Finite(d) => total += d,
        }
        let s = inner(&r, &r);
        b.vectors.push(r);
        b.self_inner.push(s);
    }
    Ok(if unknown { Valuation::Unknown(total) } else { Valuation::Finite(total) })
}

fn sample_coefficients() -> Vec<LaurentSeries> {
    let mut out = vec![LaurentSeries::zero()];
    for base in [LaurentSeries::one(), LaurentSeries::t_pow(1), LaurentSeries::t_pow(-1), LaurentSeries::from_ints(&[1, 1])] {
        out.push(-&base);
        out.push(base);
    }
    out
}

// t·ρ^m ≤ ρ^s with ρ = 1/2, i.e. t ≤ 2^(m−s).
fn t_inequality(t: &Rational, m: i64, s: Valuation) -> Option<bool> {
    match s {
        Valuation::Infinite => Some(false),
        Valuation::Unknown(_) => None,
        Valuation::Finite(s) => {
            if m >= s {
                Some(true)
            } else {
                let bound = Rational::new(num_bigint::BigInt::one(), num_bigint::BigInt::one() << (s - m) as usize);
                Some(*t <= bound)
            }
        }
    }
}

fn tuple_holds(vs: &[VectorC0], lambdas: &[LaurentSeries], t: &Rational) -> bool {
    let mut sum = VectorC0::zero();
    let mut m: Option<i64> = None;
    for (v, l) in vs.iter().zip(lambdas) {
        let term = v.scale(l);
        if let Ok(Valuation::Finite(x)) = sup_norm_val(&term) {
            m = Some(m.map_or(x, |y: i64| y.min(x)));
        }
        sum = sum.add(&term);
    }
    let Some(m) = m else { return true };
    match sup_norm_val(&sum) {
        Ok(s) => t_inequality(t, m, s).unwrap_or(true),
        Err(_) => true,
    }
}

/// Tests `t·max‖λᵢxᵢ‖ ≤ ‖Σλᵢxᵢ‖`. Exact for `t = 1`; otherwise a sampled refutation.
pub fn is_t_orthogonal(vs: &[VectorC0], t_param: &Rational, trials: usize) -> bool {
    assert!(*t_param > Rational::zero() && *t_param <= Rational::one(), "t must lie in (0, 1]");
    if t_param.is_one() {
        return orthogonal_exact(vs);
    }
    let coeffs = sample_coefficients();
    let n = vs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7_0e7);
    let full = (coeffs.len() as f64).powi(n as i32) <= 10_000.0;
    if full {
        let mut idx = vec![0usize; n];
        loop {
            let lambdas: Vec<_> = idx.iter().map(|&k| coeffs[k].clone()).collect();
            if !tuple_holds(vs, &lambdas, t_param) {
                return false;
            }
            let mut k = 0;
            while k < n {
                idx[k] += 1;
                if idx[k] < coeffs.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
    } else {
        for _ in 0..10_000 {
            let lambdas: Vec<_> = (0..n).map(|_| coeffs[rng.gen_range(0..coeffs.len())].clone()).collect();
            if !tuple_holds(vs, &lambdas, t_param) {
                return false;
            }
        }
    }
    for _ in 0..trials {
        let lambdas: Vec<_> = (0..n)
            .map(|_| LaurentSeries::monomial(rat(rng.gen_range(-3..=3)), rng.gen_range(-2..=2)))
            .collect();
        if !tuple_holds(vs, &lambdas, t_param) {
            return false;
        }
    }
    true
}

// Orthogonal iff every member keeps its full norm as distance to the span of its predecessors.
fn orthogonal_exact(vs: &[VectorC0]) -> bool {
    for (i, v) in vs.iter().enumerate() {
        let norm = match sup_norm_val(v) {
            Ok(Valuation::Finite(x)) => x,
            _ => return false,
        };
        match dist_to_span(v, &vs[..i]) {
            Ok(Valuation::Finite(d)) if d == norm => {}
            _ => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::ratio;

    fn v(s: &str) -> VectorC0 {
        s.parse().unwrap()
    }

    fn e(i: usize) -> VectorC0 {
        VectorC0::basis(i)
    }

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&v("{1: 1, 2: t}"), &e(2)), "t".parse().unwrap());
        assert_eq!(inner(&v("{1: 1, 2: 1}"), &v("{1: 1, 2: 1}")), LaurentSeries::from_int(2));
        assert_eq!(inner(&e(1), &e(2)), LaurentSeries::zero());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(sup_norm_val(&v("{1: t, 2: t^2}")).unwrap(), Valuation::Finite(1));
        assert_eq!(sup_norm_val(&VectorC0::zero()).unwrap(), Valuation::Infinite);
        assert_eq!(sup_norm_val(&v("{1: 1, 2: t^-1}")).unwrap(), Valuation::Finite(-1));
        let coarse = v("{1: t^3}").with_ambient(Some(2));
        assert_eq!(sup_norm_val(&coarse), Err(LinalgError::PrecisionExhausted));
        for x in ["{1: 1, 2: 1}", "{1: t, 2: 2*t}", "{1: 1, 2: t}"] {
            assert!(check_norm_inner(&v(x)));
        }
    }

    #[test]
    fn gram_schmidt_examples() {
        let b = gram_schmidt(&[v("{1: 1, 2: 1}"), v("{2: 1, 3: 1}")]).unwrap();
        assert_eq!(b.vectors[0], v("{1: 1, 2: 1}"));
        assert_eq!(b.vectors[1], v("{1: -1/2, 2: 1/2, 3: 1}"));
        let b = gram_schmidt(&[e(1), e(2)]).unwrap();
        assert_eq!(b.vectors, vec![e(1), e(2)]);
        assert_eq!(gram_schmidt(&[e(1), e(1)]).unwrap_err(), LinalgError::LinearlyDependent);
    }

    #[test]
    fn projection_examples() {
        let b = gram_schmidt(&[e(1)]).unwrap();
        assert_eq!(normal_projection(&b, &v("{1: 1, 2: t}")).unwrap(), e(1));
        let b = gram_schmidt(&[v("{1: 1, 2: 1}")]).unwrap();
        let p = normal_projection(&b, &e(1)).unwrap();
        assert_eq!(p, v("{1: 1/2, 2: 1/2}"));
        assert!(inner(&e(1).sub(&p), &b.vectors[0]).is_zero_to_precision());
        assert_eq!(normal_projection(&b, &p).unwrap(), p);
    }

    #[test]
    fn t_orthogonality_examples() {
        let one = rat(1);
        assert!(is_t_orthogonal(&[e(1), e(2)], &one, 10));
        assert!(!is_t_orthogonal(&[e(1), v("{1: 1, 2: t}")], &one, 10));
        assert!(is_t_orthogonal(&[v("{3: 1 + t}")], &ratio(1, 3), 10));
        // λ = (1, −1) gives ratio |t| = 1/2: fine for t = 1/2 ...
        assert!(is_t_orthogonal(&[e(1), v("{1: 1, 2: t}")], &ratio(1, 2), 20));
        // ... and fails for any t above 1/2.
        assert!(!is_t_orthogonal(&[e(1), v("{1: 1, 2: t}")], &ratio(2, 3), 20));
    }

    #[test]
    fn distance_and_volume_examples() {
        assert_eq!(dist_to_span(&e(2), &[e(1)]).unwrap(), Valuation::Finite(0));
        assert_eq!(dist_to_span(&v("{1: 1, 2: t}"), &[e(1)]).unwrap(), Valuation::Finite(1));
        assert_eq!(dist_to_span(&v("{1: 2, 2: 3}"), &[e(1), e(2)]).unwrap(), Valuation::Infinite);
        assert_eq!(volume(&[e(1), v("{1: 1, 2: t}")]).unwrap(), Valuation::Finite(1));
        assert_eq!(volume(&[e(1), e(2), e(3)]).unwrap(), Valuation::Finite(0));
        assert_eq!(volume(&[e(1), v("{1: 2}")]).unwrap(), Valuation::Infinite);
        assert_eq!(volume(&[]).unwrap_err(), LinalgError::EmptyFamily);
    }

    #[test]
    fn vector_text_round_trip() {
        let x = v("{1: 1, 2: 1/2*t}");
        assert_eq!(x.to_string(), "{1: 1, 2: 1/2*t}");
        assert_eq!(v(&x.to_string()), x);
        assert_eq!(v("{}"), VectorC0::zero());
        assert!("{0: 1}".parse::<VectorC0>().is_err());
        assert!("{1: 1, 1: 2}".parse::<VectorC0>().is_err());
        assert!("1: 1".parse::<VectorC0>().is_err());
    }
}
