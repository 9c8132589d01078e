//! Dense matrices and polynomials over ℚ.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalars::{format_rational, Rational};

#[derive(Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", format_rational(self.get(i, j)))?;
            }
        }
        write!(f, "]")
    }
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Rational::one() } else { Rational::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        RatMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Rational>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c));
        Self::from_fn(r, c, |i, j| rows[i][j].clone())
    }

    pub fn from_ints(rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Self::from_fn(r, c, |i, j| Rational::from_integer(rows[i][j].into()))
    }

    pub fn diagonal(d: &[Rational]) -> Self {
        Self::from_fn(d.len(), d.len(), |i, j| if i == j { d[i].clone() } else { Rational::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, q: Rational) {
        self.data[i * self.cols + j] = q;
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn from_columns(cols: &[Vec<Rational>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        Self::from_fn(r, c, |i, j| cols[j][i].clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) + other.get(i, j))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) - other.get(i, j))
    }

    pub fn scale(&self, q: &Rational) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * q)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|q| q.is_zero())
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j).is_zero()))
    }

    pub fn trace(&self) -> Rational {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()).sum()
    }

    /// Gauss–Jordan inverse; `None` if singular.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let piv = (col..n).find(|&r| !a.get(r, col).is_zero())?;
            a.swap_rows(piv, col);
            inv.swap_rows(piv, col);
            let p = a.get(col, col).recip();
            a.scale_row(col, &p);
            inv.scale_row(col, &p);
            for r in 0..n {
                if r != col && !a.get(r, col).is_zero() {
                    let f = a.get(r, col).clone();
                    a.axpy_row(r, col, &f);
                    inv.axpy_row(r, col, &f);
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn scale_row(&mut self, r: usize, q: &Rational) {
        for j in 0..self.cols {
            self.data[r * self.cols + j] *= q;
        }
    }

    // row[r] -= f * row[src]
    fn axpy_row(&mut self, r: usize, src: usize, f: &Rational) {
        for j in 0..self.cols {
            let v = &self.data[src * self.cols + j] * f;
            self.data[r * self.cols + j] -= v;
        }
    }

    /// Basis of the right kernel, one vector per free column of the RREF.
    pub fn kernel(&self) -> Vec<Vec<Rational>> {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..a.cols {
            if row == a.rows {
                break;
            }
            let Some(piv) = (row..a.rows).find(|&r| !a.get(r, col).is_zero()) else { continue };
            a.swap_rows(piv, row);
            let p = a.get(row, col).recip();
            a.scale_row(row, &p);
            for r in 0..a.rows {
                if r != row && !a.get(r, col).is_zero() {
                    let f = a.get(r, col).clone();
                    a.axpy_row(r, row, &f);
                }
            }
            pivots.push(col);
            row += 1;
        }
        let mut out = Vec::new();
        for free in (0..a.cols).filter(|c| !pivots.contains(c)) {
            let mut v = vec![Rational::zero(); a.cols];
            v[free] = Rational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a.get(r, free).clone();
            }
            out.push(v);
        }
        out
    }

    /// Characteristic polynomial `det(xI − A)` by Faddeev–LeVerrier.
    pub fn charpoly(&self) -> Poly {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut c = vec![Rational::zero(); n + 1];
        c[n] = Rational::one();
        let mut m = Self::zeros(n, n);
        for k in 1..=n {
            let mut next = self.mul(&m);
            for i in 0..n {
                next.data[i * n + i] += &c[n - k + 1];
            }
            m = next;
            let am = self.mul(&m);
            c[n - k] = -am.trace() / Rational::from_integer(BigInt::from(k));
        }
        Poly::new(c)
    }

    pub fn det(&self) -> Rational {
        let p = self.charpoly();
        let n = self.rows;
        let c0 = p.coeff(0);
        if n.is_multiple_of(2) {
            c0
        } else {
            -c0
        }
    }
}

/// Polynomial over ℚ, lowest degree first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    c: Vec<Rational>,
}

impl Poly {
    pub fn new(mut c: Vec<Rational>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Poly { c }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.c.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for q in self.c.iter().rev() {
            acc = acc * x + q;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(self.c.iter().enumerate().skip(1).map(|(i, q)| q * Rational::from_integer(BigInt::from(i))).collect())
    }

    pub fn monic(&self) -> Poly {
        let lead = self.c.last().expect("nonzero polynomial").clone();
        Poly::new(self.c.iter().map(|q| q / &lead).collect())
    }

    /// Quotient and remainder.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero());
        let mut r = self.c.clone();
        let dd = d.degree();
        let lead = d.c[dd].clone();
        if r.len() < d.c.len() {
            return (Poly::new(vec![]), self.clone());
        }
        let mut q = vec![Rational::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let f = &r[k + dd] / &lead;
            if !f.is_zero() {
                for (i, x) in d.c.iter().enumerate() {
                    r[k + i] -= &f * x;
                }
            }
            q[k] = f;
        }
        r.truncate(dd);
        (Poly::new(q), Poly::new(r))
    }

    pub fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    pub fn square_free(&self) -> Poly {
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0.monic()
    }

    /// Distinct rational roots, ascending.
    pub fn rational_roots(&self) -> Vec<Rational> {
        if self.degree() == 0 {
            return Vec::new();
        }
        let p = self.monic();
        let n = p.degree();
        // x = y/m turns p into a monic integer polynomial q in y; its rational
        // roots are integers.
        let m = p.c.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let mq = Rational::from_integer(m.clone());
        let mut scale = Rational::one();
        let mut qc = vec![Rational::zero(); n + 1];
        for i in (0..=n).rev() {
            qc[i] = &p.c[i] * &scale;
            scale *= &mq;
        }
        let q = Poly::new(qc);
        let sf = q.square_free();
        let bound = sf.c.iter().map(|x| x.abs()).max().unwrap().ceil().to_integer() + BigInt::from(2);
        let sturm = SturmChain::new(&sf);
        let mut roots = Vec::new();
        let lo = -bound.clone();
        let hi = bound;
        let count = sturm.variations(&lo) - sturm.variations(&hi);
        isolate(&sf, &sturm, lo, hi, count, &mut roots);
        roots.into_iter().map(|y| Rational::new(y, m.clone())).collect()
    }
}

struct SturmChain {
    polys: Vec<Poly>,
}

impl SturmChain {
    fn new(p: &Poly) -> Self {
        let mut polys = vec![p.clone(), p.derivative()];
        loop {
            let k = polys.len();
            if polys[k - 1].is_zero() {
                polys.pop();
                break;
            }
            let r = polys[k - 2].div_rem(&polys[k - 1]).1;
            if r.is_zero() {
                break;
            }
            polys.push(Poly::new(r.c.into_iter().map(|x| -x).collect()));
        }
        SturmChain { polys }
    }

    fn variations(&self, x: &BigInt) -> i64 {
        let xr = Rational::from_integer(x.clone());
        let mut last = 0i8;
        let mut v = 0;
        for p in &self.polys {
            let s = p.eval(&xr);
            let sign = if s.is_positive() {
                1
            } else if s.is_negative() {
                -1
            } else {
                0
            };
            if sign != 0 {
                if last != 0 && sign != last {
                    v += 1;
                }
                last = sign;
            }
        }
        v
    }
}

// Integer roots of the square-free `p` in `(lo, hi]`, given `count` real roots there.
fn isolate(p: &Poly, s: &SturmChain, lo: BigInt, hi: BigInt, count: i64, out: &mut Vec<BigInt>) {
    if count == 0 {
        return;
    }
    if &hi - &lo == BigInt::one() {
        if p.eval(&Rational::from_integer(hi.clone())).is_zero() {
            out.push(hi);
        }
        return;
    }
    let mid: BigInt = (&lo + &hi).div_floor(&BigInt::from(2));
    let left = s.variations(&lo) - s.variations(&mid);
    isolate(p, s, lo, mid.clone(), left, out);
    isolate(p, s, mid, hi, count - left, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{rat, ratio};

    #[test]
    fn charpoly_and_roots() {
        let a = RatMatrix::from_ints(&[&[0, 1], &[1, 1]]);
        let p = a.charpoly();
        assert_eq!(p.coeffs(), &[rat(-1), rat(-1), rat(1)]);
        assert!(p.rational_roots().is_empty());
        let b = RatMatrix::from_ints(&[&[2, 0, 0], &[0, 1, 0], &[0, 0, 2]]);
        assert_eq!(b.charpoly().rational_roots(), vec![rat(1), rat(2)]);
        let c = Poly::new(vec![ratio(-3, 4), rat(0), rat(1)]); // x² − 3/4
        assert!(c.rational_roots().is_empty());
        let d = Poly::new(vec![ratio(3, 8), ratio(-5, 4), rat(1)]); // (x − 1/2)(x − 3/4)
        assert_eq!(d.rational_roots(), vec![ratio(1, 2), ratio(3, 4)]);
        let e = Poly::new(vec![rat(0), rat(0), rat(-4), rat(1)]); // x²(x − 4)
        assert_eq!(e.rational_roots(), vec![rat(0), rat(4)]);
    }

    #[test]
    fn kernel_and_inverse() {
        let a = RatMatrix::from_ints(&[&[1, 1], &[1, 1]]);
        assert_eq!(a.kernel(), vec![vec![rat(-1), rat(1)]]);
        let b = RatMatrix::from_ints(&[&[1, 1], &[-1, 1]]);
        let bi = b.inverse().unwrap();
        assert_eq!(b.mul(&bi), RatMatrix::identity(2));
        assert_eq!(b.det(), rat(2));
        assert!(a.inverse().is_none());
    }
}
