//! Truncated Laurent series over ℚ with absolute precision.
//!
//! A series with precision `Some(n)` is known below `t^n`; everything from
//! `t^n` on is unknown. `None` marks an exact (finitely supported) series.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::factor_set::FactorSet;
use super::rational::{format_rational, parse_rational, rational_sqrt, Rational};
use super::ScalarError;

/// Working precision used when an exact input has an infinite expansion.
pub const DEFAULT_PRECISION: i64 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(i64),
    /// The exact zero.
    Infinite,
    /// Nothing nonzero below `t^n`, nothing known beyond.
    Unknown(i64),
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Largest `k` with the series certainly in `t^k ℚ[[t]]`; `None` stands for +∞.
    pub fn lower_bound(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) | Valuation::Unknown(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    /// True when the value is certainly divisible by `t^k`.
    pub fn at_least(self, k: i64) -> bool {
        self.lower_bound().is_none_or(|v| v >= k)
    }

    pub fn is_infinite(self) -> bool {
        self == Valuation::Infinite
    }

    /// Minimum as used for norms: finite values beat unknowns that lie above them.
    pub fn min_norm(self, other: Valuation) -> Valuation {
        use Valuation::*;
        match (self, other) {
            (Infinite, x) | (x, Infinite) => x,
            (Finite(a), Finite(b)) => Finite(a.min(b)),
            (Unknown(a), Unknown(b)) => Unknown(a.min(b)),
            (Finite(a), Unknown(b)) | (Unknown(b), Finite(a)) => {
                if a < b {
                    Finite(a)
                } else {
                    Unknown(b)
                }
            }
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "inf"),
            Valuation::Unknown(n) => write!(f, ">={n}"),
        }
    }
}

pub(crate) fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

// Integer numerators over one common denominator per factor; one
// reduction per output coefficient.
fn convolve(f: &BTreeMap<i64, Rational>, g: &BTreeMap<i64, Rational>, prec: Option<i64>) -> BTreeMap<i64, Rational> {
    let common = |m: &BTreeMap<i64, Rational>| {
        let den = m.values().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let nums: Vec<(i64, BigInt)> = m.iter().map(|(e, q)| (*e, q.numer() * (&den / q.denom()))).collect();
        (den, nums)
    };
    let (df, nf) = common(f);
    let (dg, ng) = common(g);
    let mut acc: BTreeMap<i64, BigInt> = BTreeMap::new();
    for (a, x) in &nf {
        for (b, y) in &ng {
            let e = a + b;
            if prec.is_some_and(|p| e >= p) {
                break;
            }
            *acc.entry(e).or_insert_with(BigInt::zero) += x * y;
        }
    }
    let den = df * dg;
    acc.into_iter().filter(|(_, n)| !n.is_zero()).map(|(e, n)| (e, Rational::new(n, den.clone()))).collect()
}

fn add_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    Some(a? + b?)
}

/// An element of ℚ((t)) known to some absolute precision.
///
/// Invariants: stored coefficients are nonzero and sit strictly below the precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentSeries {
    coeffs: BTreeMap<i64, Rational>,
    prec: Option<i64>,
}

impl LaurentSeries {
    pub fn zero() -> Self {
        LaurentSeries { coeffs: BTreeMap::new(), prec: None }
    }

    /// `O(t^n)`.
    pub fn zero_to(n: i64) -> Self {
        LaurentSeries { coeffs: BTreeMap::new(), prec: Some(n) }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(q: Rational) -> Self {
        Self::monomial(q, 0)
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(Rational::from_integer(n.into()))
    }

    pub fn monomial(q: Rational, e: i64) -> Self {
        let mut coeffs = BTreeMap::new();
        if !q.is_zero() {
            coeffs.insert(e, q);
        }
        LaurentSeries { coeffs, prec: None }
    }

    /// `t^e`.
    pub fn t_pow(e: i64) -> Self {
        Self::monomial(Rational::one(), e)
    }

    /// Builds a series from terms; repeated exponents add up and terms at or
    /// beyond `prec` are dropped.
    pub fn from_terms(terms: impl IntoIterator<Item = (i64, Rational)>, prec: Option<i64>) -> Self {
        let mut coeffs: BTreeMap<i64, Rational> = BTreeMap::new();
        for (e, q) in terms {
            if prec.is_some_and(|p| e >= p) {
                continue;
            }
            *coeffs.entry(e).or_insert_with(Rational::zero) += q;
        }
        coeffs.retain(|_, q| !q.is_zero());
        LaurentSeries { coeffs, prec }
    }

    /// Polynomial in `t` with integer coefficients, lowest degree first.
    pub fn from_ints(cs: &[i64]) -> Self {
        Self::from_terms(
            cs.iter().enumerate().map(|(i, &c)| (i as i64, Rational::from_integer(c.into()))),
            None,
        )
    }

    pub fn precision(&self) -> Option<i64> {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    pub fn coeff(&self, e: i64) -> Rational {
        self.coeffs.get(&e).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coeff_ref(&self, e: i64) -> Option<&Rational> {
        self.coeffs.get(&e)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &Rational)> + '_ {
        self.coeffs.iter().map(|(e, q)| (*e, q))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn valuation(&self) -> Valuation {
        match self.coeffs.keys().next() {
            Some(&v) => Valuation::Finite(v),
            None => match self.prec {
                None => Valuation::Infinite,
                Some(n) => Valuation::Unknown(n),
            },
        }
    }

    /// Leading term, if any coefficient is known to be nonzero.
    pub fn lead(&self) -> Option<(i64, &Rational)> {
        self.coeffs.iter().next().map(|(e, q)| (*e, q))
    }

    /// No nonzero coefficient below the precision.
    pub fn is_zero_to_precision(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Certainly divisible by `t^n`.
    pub fn vanishes_below(&self, n: i64) -> bool {
        self.valuation().at_least(n)
    }

    pub fn truncate(&self, n: i64) -> Self {
        let prec = min_opt(self.prec, Some(n));
        LaurentSeries {
            coeffs: self.coeffs.range(..n).map(|(e, q)| (*e, q.clone())).collect(),
            prec,
        }
    }

    /// Forgets precision, treating unknown coefficients as zero.
    pub fn to_exact(&self) -> Self {
        LaurentSeries { coeffs: self.coeffs.clone(), prec: None }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return LaurentSeries::zero();
        }
        LaurentSeries {
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, c * q)).collect(),
            prec: self.prec,
        }
    }

    /// Multiplication by `t^k` (untwisted shift).
    pub fn shift(&self, k: i64) -> Self {
        LaurentSeries {
            coeffs: self.coeffs.iter().map(|(e, c)| (e + k, c.clone())).collect(),
            prec: self.prec.map(|p| p + k),
        }
    }

    /// Twisted product `f·g(γ) = Σ f(α) g(β) c(α, β)`.
    pub fn mul_twisted(&self, other: &Self, c: &FactorSet) -> Self {
        let lf = self.valuation().lower_bound();
        let lg = other.valuation().lower_bound();
        let prec = min_opt(add_opt(lf, other.prec), add_opt(lg, self.prec));
        let trivial = c.is_trivial();
        if trivial {
            return LaurentSeries { coeffs: convolve(&self.coeffs, &other.coeffs, prec), prec };
        }
        let mut coeffs: BTreeMap<i64, Rational> = BTreeMap::new();
        for (&a, x) in &self.coeffs {
            for (&b, y) in &other.coeffs {
                let e = a + b;
                if prec.is_some_and(|p| e >= p) {
                    break;
                }
                let mut term = x * y;
                if !trivial {
                    term *= c.eval(a, b);
                }
                *coeffs.entry(e).or_insert_with(Rational::zero) += term;
            }
        }
        coeffs.retain(|_, q| !q.is_zero());
        LaurentSeries { coeffs, prec }
    }

    pub fn inv(&self) -> Result<Self, ScalarError> {
        let v = self.finite_valuation()?;
        if self.prec.is_none() && self.coeffs.len() == 1 {
            let (_, c) = self.lead().unwrap();
            return Ok(Self::monomial(c.recip(), -v));
        }
        let rel = match self.prec {
            Some(p) => p - v,
            None => DEFAULT_PRECISION,
        };
        Ok(self.inv_relative(v, rel))
    }

    /// Inverse known to absolute precision `n` (requires exact or sufficiently precise input).
    pub fn inv_to(&self, n: i64) -> Result<Self, ScalarError> {
        let v = self.finite_valuation()?;
        let want = n + v;
        let rel = match self.prec {
            Some(p) => (p - v).min(want),
            None => want,
        };
        Ok(self.inv_relative(v, rel.max(0)))
    }

    fn finite_valuation(&self) -> Result<i64, ScalarError> {
        match self.valuation() {
            Valuation::Finite(v) => Ok(v),
            Valuation::Infinite => Err(ScalarError::NotInvertible),
            Valuation::Unknown(_) => Err(ScalarError::PrecisionExhausted),
        }
    }

    // 1/f with `rel` coefficients past the leading one.
    fn inv_relative(&self, v: i64, rel: i64) -> Self {
        let c = self.coeff(v);
        let u = self.unit_part(v, &c, rel);
        let mut g: Vec<Rational> = Vec::with_capacity(rel as usize);
        for k in 0..rel as usize {
            if k == 0 {
                g.push(Rational::one());
                continue;
            }
            let mut acc = Rational::zero();
            for j in 1..=k {
                if !u[j].is_zero() && !g[k - j].is_zero() {
                    acc -= &u[j] * &g[k - j];
                }
            }
            g.push(acc);
        }
        let ci = c.recip();
        Self::from_terms(
            g.into_iter().enumerate().map(|(k, q)| (k as i64 - v, q * &ci)),
            Some(rel - v),
        )
    }

    // Coefficients of t^{-v} f / c, indices 0..rel.
    fn unit_part(&self, v: i64, c: &Rational, rel: i64) -> Vec<Rational> {
        let mut u = vec![Rational::zero(); rel.max(0) as usize];
        for (e, q) in self.coeffs.range(v..v + rel) {
            u[(e - v) as usize] = q / c;
        }
        u
    }

    /// The coefficient at exponent 0 of an element of the unit ball.
    pub fn residue(&self) -> Result<Rational, ScalarError> {
        match self.valuation() {
            Valuation::Finite(v) if v < 0 => Err(ScalarError::NegativeValuation),
            Valuation::Unknown(n) if n <= 0 => Err(ScalarError::PrecisionExhausted),
            _ => Ok(self.coeff(0)),
        }
    }

    /// `ρ^v` with `ρ = 1/2`; for reporting only.
    pub fn abs_value(&self) -> Result<f64, ScalarError> {
        match self.valuation() {
            Valuation::Finite(v) => Ok(0.5f64.powi(v as i32)),
            Valuation::Infinite => Ok(0.0),
            Valuation::Unknown(_) => Err(ScalarError::PrecisionExhausted),
        }
    }

    /// Square root by Hensel lifting, positive leading coefficient.
    pub fn hensel_sqrt(&self) -> Result<Self, ScalarError> {
        let v = match self.valuation() {
            Valuation::Finite(v) => v,
            Valuation::Infinite => return Ok(Self::zero()),
            Valuation::Unknown(_) => return Err(ScalarError::PrecisionExhausted),
        };
        if v.rem_euclid(2) != 0 {
            return Err(ScalarError::OddValuation);
        }
        let m = v / 2;
        let c = self.coeff(v);
        let r = rational_sqrt(&c).map_err(|_| ScalarError::ResidueNotASquare)?;
        if self.prec.is_none() && self.coeffs.len() == 1 {
            return Ok(Self::monomial(r, m));
        }
        let rel = match self.prec {
            Some(p) => p - v,
            None => DEFAULT_PRECISION,
        };
        let h = self.unit_part(v, &c, rel);
        // s² = 1 + h, lifted one coefficient at a time; 2 is a unit in ℚ.
        let mut s: Vec<Rational> = Vec::with_capacity(rel as usize);
        for k in 0..rel as usize {
            if k == 0 {
                s.push(Rational::one());
                continue;
            }
            let mut acc = h[k].clone();
            for j in 1..k {
                if !s[j].is_zero() && !s[k - j].is_zero() {
                    acc -= &s[j] * &s[k - j];
                }
            }
            s.push(acc / Rational::from_integer(2.into()));
        }
        Ok(Self::from_terms(
            s.into_iter().enumerate().map(|(k, q)| (m + k as i64, q * &r)),
            Some(m + rel),
        ))
    }
}

impl Add<&LaurentSeries> for &LaurentSeries {
    type Output = LaurentSeries;
    fn add(self, rhs: &LaurentSeries) -> LaurentSeries {
        let prec = min_opt(self.prec, rhs.prec);
        let mut coeffs = self.coeffs.clone();
        for (e, q) in &rhs.coeffs {
            *coeffs.entry(*e).or_insert_with(Rational::zero) += q;
        }
        if let Some(p) = prec {
            coeffs.retain(|e, _| *e < p);
        }
        coeffs.retain(|_, q| !q.is_zero());
        LaurentSeries { coeffs, prec }
    }
}

impl Neg for &LaurentSeries {
    type Output = LaurentSeries;
    fn neg(self) -> LaurentSeries {
        LaurentSeries {
            coeffs: self.coeffs.iter().map(|(e, q)| (*e, -q)).collect(),
            prec: self.prec,
        }
    }
}

impl Sub<&LaurentSeries> for &LaurentSeries {
    type Output = LaurentSeries;
    fn sub(self, rhs: &LaurentSeries) -> LaurentSeries {
        self + &(-rhs)
    }
}

impl Mul<&LaurentSeries> for &LaurentSeries {
    type Output = LaurentSeries;
    fn mul(self, rhs: &LaurentSeries) -> LaurentSeries {
        self.mul_twisted(rhs, &FactorSet::trivial())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<LaurentSeries> for LaurentSeries {
            type Output = LaurentSeries;
            fn $m(self, rhs: LaurentSeries) -> LaurentSeries {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            write!(f, "0")?;
        }
        for (i, (e, q)) in self.coeffs.iter().enumerate() {
            let neg = q.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let a = q.abs();
            if *e == 0 {
                write!(f, "{}", format_rational(&a))?;
                continue;
            }
            if !a.is_one() {
                write!(f, "{}*", format_rational(&a))?;
            }
            if *e == 1 {
                write!(f, "t")?;
            } else {
                write!(f, "t^{e}")?;
            }
        }
        if let Some(p) = self.prec {
            write!(f, " (prec {p})")?;
        }
        Ok(())
    }
}

impl FromStr for LaurentSeries {
    type Err = ScalarError;

    /// Grammar: `term (("+"|"-") term)* ["(prec" integer ")"]` where a term is
    /// `rational`, `rational*t^k`, `rational*t`, `t^k` or `t`.
    fn from_str(s: &str) -> Result<Self, ScalarError> {
        let err = |m: &str| ScalarError::Parse(format!("{m} in series `{s}`"));
        let mut body = s.trim();
        let mut prec = None;
        if let Some(open) = body.rfind('(') {
            let tail = body[open..].trim();
            let inner = tail
                .strip_prefix('(')
                .and_then(|x| x.strip_suffix(')'))
                .ok_or_else(|| err("unbalanced parenthesis"))?
                .trim();
            let n = inner.strip_prefix("prec").ok_or_else(|| err("expected `prec`"))?.trim();
            prec = Some(n.parse::<i64>().map_err(|_| err("bad precision"))?);
            body = body[..open].trim();
        }
        let compact: String = body.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err("empty series"));
        }
        // Split on signs that are not exponent signs.
        let bytes = compact.as_bytes();
        let mut pieces: Vec<(bool, &str)> = Vec::new();
        let mut start = 0;
        let mut neg = false;
        if bytes[0] == b'+' || bytes[0] == b'-' {
            neg = bytes[0] == b'-';
            start = 1;
        }
        let mut i = start;
        while i < bytes.len() {
            let b = bytes[i];
            if (b == b'+' || b == b'-') && i > start && bytes[i - 1] != b'^' {
                pieces.push((neg, &compact[start..i]));
                neg = b == b'-';
                start = i + 1;
            }
            i += 1;
        }
        pieces.push((neg, &compact[start..]));
        let mut terms = Vec::new();
        for (neg, piece) in pieces {
            let (coef, exp) = parse_term(piece).ok_or_else(|| err(&format!("bad term `{piece}`")))?;
            if prec.is_some_and(|p| exp >= p) {
                return Err(err("term at or beyond the stated precision"));
            }
            terms.push((exp, if neg { -coef } else { coef }));
        }
        Ok(LaurentSeries::from_terms(terms, prec))
    }
}

fn parse_term(piece: &str) -> Option<(Rational, i64)> {
    if piece.is_empty() {
        return None;
    }
    let (coef, var) = match piece.find('t') {
        None => (piece, None),
        Some(pos) => {
            let (c, v) = piece.split_at(pos);
            let c = if c.is_empty() { "1" } else { c.strip_suffix('*')? };
            (c, Some(v))
        }
    };
    let q = parse_rational(coef).ok()?;
    let exp = match var {
        None => 0,
        Some("t") => 1,
        Some(v) => {
            let e = v.strip_prefix("t^")?;
            let body = e.strip_prefix('-').unwrap_or(e);
            if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            e.parse().ok()?
        }
    };
    Some((q, exp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{rat, ratio};

    fn s(x: &str) -> LaurentSeries {
        x.parse().unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(s("t + t^2 (prec 5)") + s("-t (prec 5)"), s("t^2 (prec 5)"));
        assert_eq!(s("1 (prec 10)") + s("0 (prec 3)"), s("1 (prec 3)"));
        assert_eq!(s("t^2 + 3*t^3") + s("t^3"), s("t^2 + 4*t^3"));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(s("1 + t") * s("1 - t"), s("1 - t^2"));
        let c = FactorSet::exponential(rat(2));
        assert_eq!(s("t").mul_twisted(&s("t"), &c), s("2*t^2"));
        let f = s("3 - 1/2*t^-1 + t^4 (prec 9)");
        assert_eq!(&f * &LaurentSeries::one(), f);
    }

    #[test]
    fn mul_precision_rule() {
        // v(f) + prec(g) = 1 + 5, v(g) + prec(f) = 0 + 4
        let p = s("t (prec 4)") * s("1 + t (prec 5)");
        assert_eq!(p.precision(), Some(4));
        let z = s("0 (prec 3)") * s("0 (prec 2)");
        assert_eq!(z.precision(), Some(5));
        assert_eq!(LaurentSeries::zero() * s("1 (prec 3)"), LaurentSeries::zero());
    }

    #[test]
    fn inverse_examples() {
        let g = s("1 - t").inv().unwrap();
        assert_eq!(g.precision(), Some(DEFAULT_PRECISION));
        assert!((0..DEFAULT_PRECISION).all(|k| g.coeff(k) == rat(1)));
        assert_eq!(s("t").inv().unwrap(), s("t^-1"));
        let h = s("2 + t").inv().unwrap();
        assert_eq!(h.coeff(0), ratio(1, 2));
        assert_eq!(h.coeff(1), ratio(-1, 4));
        assert_eq!(h.coeff(2), ratio(1, 8));
        let one = &h * &s("2 + t");
        assert_eq!(one.truncate(DEFAULT_PRECISION), s("1").truncate(DEFAULT_PRECISION));
        assert_eq!(LaurentSeries::zero().inv(), Err(ScalarError::NotInvertible));
        assert_eq!(s("0 (prec 4)").inv(), Err(ScalarError::PrecisionExhausted));
    }

    #[test]
    fn inverse_tracks_precision() {
        let f = s("t + t^2 (prec 6)");
        let g = f.inv().unwrap();
        assert_eq!(g.precision(), Some(4));
        let p = &f * &g;
        assert_eq!(p, s("1 (prec 5)"));
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(s("t^2 + 3*t^3").valuation(), Valuation::Finite(2));
        assert_eq!(LaurentSeries::zero().valuation(), Valuation::Infinite);
        assert_eq!(s("0 (prec 7)").valuation(), Valuation::Unknown(7));
    }

    #[test]
    fn abs_and_residue() {
        assert_eq!(s("t^2").abs_value().unwrap(), 0.25);
        assert_eq!(s("1").abs_value().unwrap(), 1.0);
        assert_eq!(LaurentSeries::zero().abs_value().unwrap(), 0.0);
        assert!(s("0 (prec 2)").abs_value().is_err());
        assert_eq!(s("3 + t").residue().unwrap(), rat(3));
        assert_eq!(s("t").residue().unwrap(), rat(0));
        assert_eq!(s("5/7 + 2*t^3").residue().unwrap(), ratio(5, 7));
        assert_eq!(s("t^-1 + 1").residue(), Err(ScalarError::NegativeValuation));
    }

    #[test]
    fn sqrt_examples() {
        let g = s("1 + t").hensel_sqrt().unwrap();
        assert_eq!(g.coeff(0), rat(1));
        assert_eq!(g.coeff(1), ratio(1, 2));
        assert_eq!(g.coeff(2), ratio(-1, 8));
        assert_eq!((&g * &g).truncate(DEFAULT_PRECISION), s("1 + t").truncate(DEFAULT_PRECISION));
        assert_eq!(s("4*t^2").hensel_sqrt().unwrap(), s("2*t"));
        assert_eq!(s("2 + t").hensel_sqrt(), Err(ScalarError::ResidueNotASquare));
        assert_eq!(s("t^3").hensel_sqrt(), Err(ScalarError::OddValuation));
        assert_eq!(s("-1").hensel_sqrt(), Err(ScalarError::ResidueNotASquare));
    }

    #[test]
    fn text_round_trip() {
        for x in ["1 + 1/2*t - 1/8*t^2 (prec 32)", "0", "0 (prec 7)", "-t^-2 + 3 - t", "-5/3*t^4 (prec 5)"] {
            let f = s(x);
            assert_eq!(s(&f.to_string()), f);
        }
        assert_eq!(s("1 + 1/2*t - 1/8*t^2 (prec 32)").to_string(), "1 + 1/2*t - 1/8*t^2 (prec 32)");
        assert_eq!(s("2*t^1 + 1*t^0").to_string(), "1 + 2*t");
        assert_eq!(s("t^-1 - t^-1"), LaurentSeries::zero());
        for bad in ["", "1 +", "t^", "3*x", "1 (prec)", "t^5 (prec 3)", "1/0", "2t"] {
            assert!(bad.parse::<LaurentSeries>().is_err(), "{bad}");
        }
    }
}
