//! Matrices over ℚ((t)) stored as a list of rational coefficient matrices.

use num_traits::Zero;

use super::qmat::QMat;
use crate::scalars::{FactorSet, LaurentSeries};

/// `Σ_k coeffs[k]·t^{start+k}`; coefficients past the end are unknown and
/// treated as zero by arithmetic.
#[derive(Clone, Debug)]
pub struct MatSeries {
    pub rows: usize,
    pub cols: usize,
    pub start: i64,
    pub coeffs: Vec<QMat>,
}

impl MatSeries {
    /// Exponent one past the last stored coefficient.
    pub fn end(&self) -> i64 {
        self.start + self.coeffs.len() as i64
    }

    pub fn coeff(&self, e: i64) -> Option<&QMat> {
        if e < self.start {
            return None;
        }
        self.coeffs.get((e - self.start) as usize)
    }

    /// Reads coefficients `start..end` out of a series matrix.
    pub fn from_entries(entries: &[Vec<LaurentSeries>], start: i64, end: i64) -> Self {
        let rows = entries.len();
        let cols = entries.first().map_or(0, |r| r.len());
        let mut coeffs = Vec::new();
        for e in start..end {
            let m = super::ratmat::RatMatrix::from_fn(rows, cols, |i, j| entries[i][j].coeff(e));
            coeffs.push(QMat::from_rat(&m));
        }
        MatSeries { rows, cols, start, coeffs }
    }

    /// Entries as series of absolute precision `prec` (None keeps them exact).
    pub fn to_entries(&self, prec: Option<i64>) -> Vec<Vec<LaurentSeries>> {
        let mut out = vec![vec![LaurentSeries::zero(); self.cols]; self.rows];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let terms = self
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, m)| (self.start + k as i64, m.get(i, j)))
                    .filter(|(e, q)| !q.is_zero() && prec.is_none_or(|p| *e < p));
                *cell = LaurentSeries::from_terms(terms, prec);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        MatSeries { rows: self.cols, cols: self.rows, start: self.start, coeffs: self.coeffs.iter().map(|m| m.transpose()).collect() }
    }

    /// Twisted product, coefficients below `upto` only.
    pub fn mul(&self, other: &Self, c: &FactorSet, upto: i64) -> Self {
        let start = self.start + other.start;
        let mut coeffs = Vec::new();
        for e in start..upto {
            let terms: Vec<_> = self
                .coeffs
                .iter()
                .enumerate()
                .filter_map(|(k, a)| {
                    let alpha = self.start + k as i64;
                    other.coeff(e - alpha).map(|b| (a, b, c.eval(alpha, e - alpha)))
                })
                .collect();
            let acc = QMat::sum_products(self.rows, other.cols, &terms);
            coeffs.push(acc);
        }
        MatSeries { rows: self.rows, cols: other.cols, start, coeffs }
    }

    /// First exponent below `end` carrying a nonzero coefficient.
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs.iter().position(|m| !m.is_zero()).map(|k| self.start + k as i64)
    }
}
