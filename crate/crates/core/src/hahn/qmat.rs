//! Rational matrices stored over a single common denominator.
//!
//! The order loop multiplies many matrices whose entries share large
//! denominators; keeping one denominator per matrix avoids a gcd per entry.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::ratmat::RatMatrix;
use crate::scalars::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMat {
    rows: usize,
    cols: usize,
    num: Vec<BigInt>,
    den: BigInt,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, num: vec![BigInt::zero(); rows * cols], den: BigInt::one() }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.num[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_rat(m: &RatMatrix) -> Self {
        let (r, c) = (m.rows(), m.cols());
        let mut den = BigInt::one();
        for i in 0..r {
            for j in 0..c {
                den = den.lcm(m.get(i, j).denom());
            }
        }
        let mut num = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                let q = m.get(i, j);
                num.push(q.numer() * (&den / q.denom()));
            }
        }
        QMat { rows: r, cols: c, num, den }
    }

    pub fn to_rat(&self) -> RatMatrix {
        RatMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Rational {
        Rational::new(self.num[i * self.cols + j].clone(), self.den.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|x| x.is_zero())
    }

    pub fn entry_is_zero(&self, i: usize, j: usize) -> bool {
        self.num[i * self.cols + j].is_zero()
    }

    fn normalized(mut self) -> Self {
        if self.den.is_negative() {
            self.den = -self.den;
            for x in &mut self.num {
                *x = -&*x;
            }
        }
        if self.den.is_one() {
            return self;
        }
        let mut g = self.den.clone();
        for x in &self.num {
            if !x.is_zero() {
                g = g.gcd(x);
                if g.is_one() {
                    return self;
                }
            }
        }
        if self.num.iter().all(|x| x.is_zero()) {
            self.den = BigInt::one();
            return self;
        }
        self.den /= &g;
        for x in &mut self.num {
            *x /= &g;
        }
        self
    }

    pub fn transpose(&self) -> Self {
        let mut num = Vec::with_capacity(self.num.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                num.push(self.num[i * self.cols + j].clone());
            }
        }
        QMat { rows: self.cols, cols: self.rows, num, den: self.den.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut num = vec![BigInt::zero(); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.num[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other.num[k * other.cols + j];
                    if !b.is_zero() {
                        num[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        QMat { rows: self.rows, cols: other.cols, num, den: &self.den * &other.den }.normalized()
    }

    /// `Σ q_k·A_k·B_k`, normalized once at the end.
    pub fn sum_products(rows: usize, cols: usize, terms: &[(&QMat, &QMat, Rational)]) -> Self {
        let mut den = BigInt::one();
        let terms: Vec<_> = terms.iter().filter(|(a, b, q)| !q.is_zero() && !a.is_zero() && !b.is_zero()).collect();
        for (a, b, q) in &terms {
            den = den.lcm(&(&a.den * &b.den * q.denom()));
        }
        let mut num = vec![BigInt::zero(); rows * cols];
        for (a, b, q) in terms {
            debug_assert_eq!((a.rows, b.cols, a.cols), (rows, cols, b.rows));
            let f = &den / (&a.den * &b.den * q.denom()) * q.numer();
            let unit = f.is_one();
            for i in 0..rows {
                for k in 0..a.cols {
                    let x = &a.num[i * a.cols + k];
                    if x.is_zero() {
                        continue;
                    }
                    let x = if unit { x.clone() } else { x * &f };
                    for j in 0..cols {
                        let y = &b.num[k * cols + j];
                        if !y.is_zero() {
                            num[i * cols + j] += &x * y;
                        }
                    }
                }
            }
        }
        QMat { rows, cols, num, den }.normalized()
    }

    /// `self + q·other`.
    pub fn add_scaled(&self, other: &Self, q: &Rational) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        if q.is_zero() || other.is_zero() {
            return self.clone();
        }
        let oden = &other.den * q.denom();
        let l = self.den.lcm(&oden);
        let fa = &l / &self.den;
        let fb = (&l / &oden) * q.numer();
        let num = self.num.iter().zip(&other.num).map(|(a, b)| a * &fa + b * &fb).collect();
        QMat { rows: self.rows, cols: self.cols, num, den: l }.normalized()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, &Rational::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, &-Rational::one())
    }

    pub fn scale(&self, q: &Rational) -> Self {
        QMat {
            rows: self.rows,
            cols: self.cols,
            num: self.num.iter().map(|x| x * q.numer()).collect(),
            den: &self.den * q.denom(),
        }
        .normalized()
    }

    /// Multiplies row `i` by `d[i]`.
    pub fn scale_rows(&self, d: &[Rational]) -> Self {
        let rm = self.to_rat();
        QMat::from_rat(&RatMatrix::from_fn(self.rows, self.cols, |i, j| rm.get(i, j) * &d[i]))
    }

    pub fn scale_cols(&self, d: &[Rational]) -> Self {
        let rm = self.to_rat();
        QMat::from_rat(&RatMatrix::from_fn(self.rows, self.cols, |i, j| rm.get(i, j) * &d[j]))
    }

    pub fn map_entries(&self, f: impl Fn(usize, usize, Rational) -> Rational) -> Self {
        let rm = self.to_rat();
        QMat::from_rat(&RatMatrix::from_fn(self.rows, self.cols, |i, j| f(i, j, rm.get(i, j).clone())))
    }

    pub fn submatrix(&self, r: std::ops::Range<usize>, c: std::ops::Range<usize>) -> Self {
        let mut num = Vec::with_capacity(r.len() * c.len());
        for i in r.clone() {
            for j in c.clone() {
                num.push(self.num[i * self.cols + j].clone());
            }
        }
        QMat { rows: r.len(), cols: c.len(), num, den: self.den.clone() }.normalized()
    }

    pub fn block_diag(blocks: &[&QMat]) -> Self {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let m: usize = blocks.iter().map(|b| b.cols).sum();
        let den = blocks.iter().fold(BigInt::one(), |acc, b| acc.lcm(&b.den));
        let mut num = vec![BigInt::zero(); n * m];
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            let f = &den / &b.den;
            for i in 0..b.rows {
                for j in 0..b.cols {
                    num[(r0 + i) * m + c0 + j] = &b.num[i * b.cols + j] * &f;
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        QMat { rows: n, cols: m, num, den }
    }

    pub fn is_identity(&self) -> bool {
        self.den.is_one()
            && self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self.num[i * self.cols + j] == BigInt::from(u8::from(i == j))))
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.num[i * self.cols + j] == self.num[j * self.cols + i]))
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..=i).all(|j| self.num[i * self.cols + j] == -&self.num[j * self.cols + i]))
    }

    pub fn diag(&self) -> Vec<Rational> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// Whether every entry coupling two different labels vanishes.
    pub fn off_block_zero(&self, labels: &[usize]) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| labels[i] == labels[j] || self.num[i * self.cols + j].is_zero()))
    }

    pub fn off_diag_zero(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.num[i * self.cols + j].is_zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::ratio;

    #[test]
    fn common_denominator_arithmetic() {
        let a = QMat::from_rat(&RatMatrix::from_rows(&[vec![ratio(1, 2), ratio(1, 3)], vec![ratio(0, 1), ratio(2, 1)]]));
        let b = a.transpose();
        let p = a.mul(&b);
        assert_eq!(p.to_rat(), a.to_rat().mul(&b.to_rat()));
        let s = a.add_scaled(&b, &ratio(-3, 5));
        assert_eq!(s.to_rat(), a.to_rat().add(&b.to_rat().scale(&ratio(-3, 5))));
        assert!(a.sub(&a).is_zero());
        assert!(p.is_symmetric());
    }
}
