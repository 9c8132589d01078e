//! Diagonalization of rational symmetric matrices: the residue-level step.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::ratmat::{Poly, RatMatrix};
use crate::scalars::{format_rational, rational_sqrt, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaseError {
    #[error("irrational eigenvalue: characteristic polynomial {charpoly} has {missing} non-rational root(s)")]
    IrrationalEigenvalue { charpoly: String, missing: usize },
    #[error("eigenspace of {eigenvalue} has no rational orthonormal basis (squared norm {norm_sq})")]
    NotOrthonormalizable { eigenvalue: String, norm_sq: String },
}

/// Columns of `o` are eigenvectors: `oᵀ·B·o = diag(gram_i·eigenvalues_i)` and
/// `oᵀ·G·o = diag(gram)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseDiag {
    pub o: RatMatrix,
    pub eigenvalues: Vec<Rational>,
    pub gram: Vec<Rational>,
}

pub trait BaseDiagOracle: Send + Sync {
    /// Solves `B·o = d·G·o` for symmetric `b0` and positive diagonal metric `G`.
    ///
    /// In strict mode `G = I` and the returned columns must be unit vectors.
    /// `hints` are the next coefficients of the series whose leading term is
    /// `b0`; an oracle may use them to pick a basis inside degenerate eigenspaces.
    fn diagonalize(&self, b0: &RatMatrix, metric: &[Rational], hints: &[RatMatrix], strict: bool) -> Result<BaseDiag, BaseError>;
}

/// Rational eigenvalues from the characteristic polynomial, eigenspaces by
/// exact kernels, Gram–Schmidt inside each eigenspace.
#[derive(Clone, Copy, Debug, Default)]
pub struct RationalRootOracle;

impl BaseDiagOracle for RationalRootOracle {
    fn diagonalize(&self, b0: &RatMatrix, metric: &[Rational], hints: &[RatMatrix], strict: bool) -> Result<BaseDiag, BaseError> {
        let spaces = eigenspaces(b0, metric)?;
        let mut cols: Vec<(Vec<Rational>, Rational, Rational)> = Vec::new();
        for (mu, space) in spaces {
            if strict {
                for v in orthonormal_basis(space, hints, &mu)? {
                    cols.push((v, mu.clone(), Rational::one()));
                }
            } else {
                for v in gram_schmidt(&space, metric) {
                    let v = primitive(&v);
                    let g = inner(&v, &v, metric);
                    match rational_sqrt(&g) {
                        Ok(s) => {
                            let unit: Vec<Rational> = v.iter().map(|x| x / &s).collect();
                            cols.push((unit, mu.clone(), Rational::one()));
                        }
                        Err(_) => cols.push((v, mu.clone(), g)),
                    }
                }
            }
        }
        cols.sort_by(|a, b| first_nonzero(&a.0).cmp(&first_nonzero(&b.0)).then_with(|| a.1.cmp(&b.1)));
        let o = RatMatrix::from_columns(&cols.iter().map(|c| c.0.clone()).collect::<Vec<_>>());
        Ok(BaseDiag {
            o,
            eigenvalues: cols.iter().map(|c| c.1.clone()).collect(),
            gram: cols.into_iter().map(|c| c.2).collect(),
        })
    }
}

/// Orthogonal `O` and diagonal `D` with `Oᵀ·A0·O = D`, using the default oracle.
pub fn base_diagonalize(a0: &RatMatrix) -> Result<(RatMatrix, Vec<Rational>), BaseError> {
    let ones = vec![Rational::one(); a0.rows()];
    let r = RationalRootOracle.diagonalize(a0, &ones, &[], true)?;
    Ok((r.o, r.eigenvalues))
}

/// Gram–Schmidt inside each group, then unit normalization.
pub fn orthogonalize_eigenbasis(groups: &[Vec<Vec<Rational>>]) -> Result<RatMatrix, BaseError> {
    let mut cols = Vec::new();
    for (k, g) in groups.iter().enumerate() {
        let label = Rational::from_integer(BigInt::from(k));
        cols.extend(orthonormal_basis(g.clone(), &[], &label)?);
    }
    Ok(RatMatrix::from_columns(&cols))
}

fn inner(x: &[Rational], y: &[Rational], metric: &[Rational]) -> Rational {
    x.iter().zip(y).zip(metric).map(|((a, b), g)| a * b * g).sum()
}

fn first_nonzero(v: &[Rational]) -> usize {
    v.iter().position(|x| !x.is_zero()).unwrap_or(v.len())
}

// Integer vector with coprime entries and positive leading entry.
fn primitive(v: &[Rational]) -> Vec<Rational> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Rational::from_integer(l.clone())).to_integer()).collect();
    let mut g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    if ints.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        g = -g;
    }
    ints.into_iter().map(|x| Rational::from_integer(x / &g)).collect()
}

fn gram_schmidt(vs: &[Vec<Rational>], metric: &[Rational]) -> Vec<Vec<Rational>> {
    let mut out: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for (u, uu) in &out {
            let f = inner(v, u, metric) / uu;
            if !f.is_zero() {
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= &f * ui;
                }
            }
        }
        let ww = inner(&w, &w, metric);
        if !ww.is_zero() {
            out.push((w, ww));
        }
    }
    out.into_iter().map(|p| p.0).collect()
}

/// Distinct rational eigenvalues of `G⁻¹B` with kernel bases of `B − μG`.
fn eigenspaces(b: &RatMatrix, metric: &[Rational]) -> Result<Vec<(Rational, Vec<Vec<Rational>>)>, BaseError> {
    let n = b.rows();
    let m = RatMatrix::from_fn(n, n, |i, j| b.get(i, j) / &metric[i]);
    let p = m.charpoly();
    let mut out = Vec::new();
    let mut found = 0;
    for mu in p.rational_roots() {
        let shifted = RatMatrix::from_fn(n, n, |i, j| if i == j { b.get(i, j) - &mu * &metric[i] } else { b.get(i, j).clone() });
        let ker = shifted.kernel();
        found += ker.len();
        out.push((mu, ker));
    }
    if found < n {
        return Err(BaseError::IrrationalEigenvalue { charpoly: format_poly(&p), missing: n - found });
    }
    Ok(out)
}

// Orthonormal basis of `space` in the standard inner product. When plain
// Gram–Schmidt leaves irrational norms, the first hint's compression onto the
// space selects a splitting and each piece is retried with the remaining hints.
fn orthonormal_basis(space: Vec<Vec<Rational>>, hints: &[RatMatrix], mu: &Rational) -> Result<Vec<Vec<Rational>>, BaseError> {
    let n = space.first().map_or(0, |v| v.len());
    let ones = vec![Rational::one(); n];
    let w = gram_schmidt(&space, &ones);
    let norms: Vec<Rational> = w.iter().map(|v| inner(v, v, &ones)).collect();
    if let Some(bad) = norms.iter().position(|q| rational_sqrt(q).is_err()) {
        let fail = || BaseError::NotOrthonormalizable { eigenvalue: format_rational(mu), norm_sq: format_rational(&norms[bad]) };
        let Some((h, rest)) = hints.split_first() else { return Err(fail()) };
        let k = w.len();
        let hw: Vec<Vec<Rational>> =
            w.iter().map(|v| (0..n).map(|i| (0..n).map(|j| h.get(i, j) * &v[j]).sum()).collect()).collect();
        let m = RatMatrix::from_fn(k, k, |i, j| inner(&w[i], &hw[j], &ones) / &norms[i]);
        let p = m.charpoly();
        let roots = p.rational_roots();
        if roots.len() == 1 {
            return orthonormal_basis(w, rest, mu).map_err(|_| fail());
        }
        let mut out = Vec::new();
        let mut dims = 0;
        for nu in roots {
            let shifted = RatMatrix::from_fn(k, k, |i, j| if i == j { m.get(i, j) - &nu } else { m.get(i, j).clone() });
            let sub: Vec<Vec<Rational>> = shifted
                .kernel()
                .into_iter()
                .map(|z| (0..n).map(|i| z.iter().zip(&w).map(|(zj, wj)| zj * &wj[i]).sum()).collect())
                .collect();
            dims += sub.len();
            out.extend(orthonormal_basis(sub, rest, mu).map_err(|_| fail())?);
        }
        if dims < k {
            return Err(fail());
        }
        return Ok(out);
    }
    Ok(w.into_iter()
        .zip(norms)
        .map(|(v, q)| {
            let s = rational_sqrt(&q).expect("checked above");
            v.into_iter().map(|x| x / &s).collect()
        })
        .collect())
}

pub(crate) fn format_poly(p: &Poly) -> String {
    let mut parts = Vec::new();
    for (i, c) in p.coeffs().iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let mono = match i {
            0 => String::new(),
            1 => "x".into(),
            _ => format!("x^{i}"),
        };
        let coef = if mono.is_empty() {
            format_rational(c)
        } else if c.is_one() {
            String::new()
        } else if *c == -Rational::one() {
            "-".into()
        } else {
            format!("{}*", format_rational(c))
        };
        parts.push(format!("{coef}{mono}"));
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ").replace("+ -", "- ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{rat, ratio};

    #[test]
    fn diagonal_input_is_untouched() {
        let (o, d) = base_diagonalize(&RatMatrix::from_ints(&[&[1, 0], &[0, 2]])).unwrap();
        assert_eq!(o, RatMatrix::identity(2));
        assert_eq!(d, vec![rat(1), rat(2)]);
    }

    #[test]
    fn golden_ratio_matrix_is_rejected() {
        let e = base_diagonalize(&RatMatrix::from_ints(&[&[0, 1], &[1, 1]])).unwrap_err();
        assert!(matches!(e, BaseError::IrrationalEigenvalue { missing: 2, .. }), "{e}");
        assert!(e.to_string().contains("x^2 - x - 1"));
    }

    #[test]
    fn eigenbasis_normalization() {
        let o = orthogonalize_eigenbasis(&[vec![vec![rat(3), rat(4)]]]).unwrap();
        assert_eq!(o.column(0), vec![ratio(3, 5), ratio(4, 5)]);
        let id = orthogonalize_eigenbasis(&[vec![vec![rat(1), rat(0)]], vec![vec![rat(0), rat(1)]]]).unwrap();
        assert_eq!(id, RatMatrix::identity(2));
        assert!(matches!(
            orthogonalize_eigenbasis(&[vec![vec![rat(1), rat(1)]]]),
            Err(BaseError::NotOrthonormalizable { .. })
        ));
    }

    #[test]
    fn conjugated_diagonal_round_trip() {
        // O from the Cayley transform of [[0,1/2],[-1/2,0]]: rows (3/5,-4/5), (4/5,3/5).
        let o = RatMatrix::from_rows(&[vec![ratio(3, 5), ratio(-4, 5)], vec![ratio(4, 5), ratio(3, 5)]]);
        let d = RatMatrix::diagonal(&[rat(-1), rat(4)]);
        let a = o.transpose().mul(&d).mul(&o);
        let (u, ev) = base_diagonalize(&a).unwrap();
        assert_eq!(u.transpose().mul(&u), RatMatrix::identity(2));
        assert_eq!(u.transpose().mul(&a).mul(&u), RatMatrix::diagonal(&ev));
        let mut sorted = ev.clone();
        sorted.sort();
        assert_eq!(sorted, vec![rat(-1), rat(4)]);
    }

    #[test]
    fn hints_split_degenerate_eigenspace() {
        // A0 = 2I on a plane spanned by (1,1,0)/√2-type vectors needs the hint.
        let o = RatMatrix::from_rows(&[
            vec![ratio(1, 3), ratio(2, 3), ratio(2, 3)],
            vec![ratio(2, 3), ratio(1, 3), ratio(-2, 3)],
            vec![ratio(2, 3), ratio(-2, 3), ratio(1, 3)],
        ]);
        let a0 = o.transpose().mul(&RatMatrix::diagonal(&[rat(2), rat(2), rat(5)])).mul(&o);
        let a1 = o.transpose().mul(&RatMatrix::diagonal(&[rat(1), rat(-1), rat(0)])).mul(&o);
        let ones = vec![rat(1); 3];
        let plain = RationalRootOracle.diagonalize(&a0, &ones, &[], true);
        let hinted = RationalRootOracle.diagonalize(&a0, &ones, &[a1], true).unwrap();
        assert!(plain.is_err() || plain.as_ref().unwrap().o.transpose().mul(&plain.as_ref().unwrap().o) == RatMatrix::identity(3));
        assert_eq!(hinted.o.transpose().mul(&hinted.o), RatMatrix::identity(3));
        assert_eq!(hinted.o.transpose().mul(&a0).mul(&hinted.o), RatMatrix::diagonal(&hinted.eigenvalues));
    }

    #[test]
    fn relaxed_mode_keeps_irrational_norms_as_gram() {
        let a = RatMatrix::from_ints(&[&[1, 1], &[1, 1]]);
        let r = RationalRootOracle.diagonalize(&a, &[rat(1), rat(1)], &[], false).unwrap();
        let g = r.o.transpose().mul(&r.o);
        assert_eq!(g, RatMatrix::diagonal(&r.gram));
        assert_eq!(r.gram, vec![rat(2), rat(2)]);
    }
}
