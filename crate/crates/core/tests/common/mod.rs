#![allow(dead_code)]

use proptest::prelude::*;

use ultraspec::linalg::VectorC0;
use ultraspec::scalars::{ratio, LaurentSeries, Rational, Valuation};

pub fn s(text: &str) -> LaurentSeries {
    text.parse().unwrap()
}

pub fn arb_rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| ratio(n, d))
}

/// Exact series with a handful of terms between `t^-3` and `t^8`.
pub fn arb_series() -> impl Strategy<Value = LaurentSeries> {
    prop::collection::vec((-3i64..8, arb_rational()), 0..5).prop_map(|terms| LaurentSeries::from_terms(terms, None))
}

pub fn arb_nonzero_series() -> impl Strategy<Value = LaurentSeries> {
    arb_series().prop_filter("nonzero", |f| f.valuation().finite().is_some())
}

pub fn arb_vector() -> impl Strategy<Value = VectorC0> {
    prop::collection::vec((1usize..=6, arb_series()), 0..5).prop_map(VectorC0::from_entries)
}

pub fn arb_nonzero_vector() -> impl Strategy<Value = VectorC0> {
    arb_vector().prop_filter("nonzero", |x| !x.is_zero_to_precision())
}

// ---- Independent eigenvalue oracle: Newton on det(xI - A) over K. ----

/// Polynomial in `x` with series coefficients, lowest degree first.
pub type SeriesPoly = Vec<LaurentSeries>;

fn trunc(f: &LaurentSeries, n: i64) -> LaurentSeries {
    f.truncate(n)
}

/// Characteristic polynomial `det(xI − A)` by Faddeev–LeVerrier, every
/// coefficient truncated below `t^n`.
pub fn charpoly(a: &[Vec<LaurentSeries>], n: i64) -> SeriesPoly {
    let d = a.len();
    let mul = |x: &[Vec<LaurentSeries>], y: &[Vec<LaurentSeries>]| -> Vec<Vec<LaurentSeries>> {
        (0..d)
            .map(|i| (0..d).map(|j| (0..d).fold(LaurentSeries::zero(), |acc, k| trunc(&(&acc + &(&x[i][k] * &y[k][j])), n))).collect())
            .collect()
    };
    // c_d = 1, M_1 = I, c_{d-k} = -tr(A M_k)/k, M_{k+1} = A M_k + c_{d-k} I.
    let mut coeffs = vec![LaurentSeries::zero(); d + 1];
    coeffs[d] = LaurentSeries::one();
    let mut m: Vec<Vec<LaurentSeries>> =
        (0..d).map(|i| (0..d).map(|j| if i == j { LaurentSeries::one() } else { LaurentSeries::zero() }).collect()).collect();
    for k in 1..=d {
        let am = mul(a, &m);
        let tr = (0..d).fold(LaurentSeries::zero(), |acc, i| &acc + &am[i][i]);
        let c = tr.scale(&ratio(-1, k as i64));
        coeffs[d - k] = trunc(&c, n);
        m = am;
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = &row[i] + &coeffs[d - k];
        }
    }
    coeffs
}

pub fn eval(p: &SeriesPoly, x: &LaurentSeries, n: i64) -> LaurentSeries {
    p.iter().rev().fold(LaurentSeries::zero(), |acc, c| trunc(&(&(&acc * x) + c), n))
}

pub fn derivative(p: &SeriesPoly) -> SeriesPoly {
    p.iter().enumerate().skip(1).map(|(k, c)| c.scale(&Rational::from_integer((k as i64).into()))).collect()
}

/// Newton iteration from `seed`. `None` if the derivative stays too small
/// for the iteration to be contracting.
pub fn newton_root(p: &SeriesPoly, seed: &LaurentSeries, n: i64) -> Option<LaurentSeries> {
    let dp = derivative(p);
    let work = n + 32;
    let mut y = seed.clone();
    for _ in 0..64 {
        let fy = eval(p, &y, work);
        let dy = eval(&dp, &y, work);
        let Valuation::Finite(vd) = dy.valuation() else {
            return None;
        };
        let vf = match fy.valuation() {
            Valuation::Finite(v) => v,
            _ => return Some(y.truncate(n)),
        };
        // The root lies within t^(vf - vd) of y; unique once vf > 2 vd.
        if vf <= 2 * vd {
            return None;
        }
        if vf - vd >= n {
            return Some(y.truncate(n));
        }
        let step = &fy * &dy.inv_to(work).ok()?;
        y = trunc(&(&y - &step), work);
    }
    None
}
