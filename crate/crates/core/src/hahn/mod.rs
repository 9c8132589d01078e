//! Orthogonal diagonalization of symmetric matrices over ℚ((t)), optionally
//! with a factor set twisting the product.
//!
//! After scaling to valuation 0, the leading coefficient `A₀` is diagonalized
//! over ℚ and the coordinates are grouped by eigenvalue. Then `U = Σ U_δ t^δ`
//! is built one order at a time:
//!
//! ```text
//! S_δ = Σ_{α+β=δ, α,β≥1} U_αᵀ U_β c(α,β)
//! T_δ = −½(S_δ A₀ + A₀ S_δ) + Σ_{α+β+η=δ, α,η≠δ} U_αᵀ A_β U_η c(α,β,η)
//! q_ij = t_ij / (a_jj − a_ii)   for i, j in different groups, else 0
//! U_δ = −½ S_δ + Q_δ
//! ```
//!
//! which keeps `UᵀU = I` and makes `UᵀAU` blockdiagonal at every order. Each
//! block is then treated the same way after its scalar leading part is
//! removed. For `A = [[1, t], [t, 2]]` the first order gives `S₁ = 0`,
//! `T₁ = [[0, 1], [1, 0]]` and `U₁ = Q₁ = [[0, 1], [−1, 0]]`.

mod base;
mod generate;
mod matseries;
mod order;
mod qmat;
mod ratmat;

use std::fmt;

use num_traits::One;
use thiserror::Error;

pub use base::{base_diagonalize, orthogonalize_eigenbasis, BaseDiag, BaseDiagOracle, BaseError, RationalRootOracle};
pub use generate::{cayley, gen_test_instance, gen_test_matrix, TestInstance};
pub use matseries::MatSeries;
pub use order::{OrderLoop, StepTrace};
pub use qmat::QMat;
pub use ratmat::{Poly, RatMatrix};

use crate::scalars::{FactorSet, LaurentSeries, Rational, Valuation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagError {
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("block {path:?}: {source}")]
    Base { path: Vec<usize>, source: BaseError },
    #[error("matrix vanishes to its precision")]
    PrecisionExhausted,
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
}

impl DiagError {
    pub fn is_irrational(&self) -> bool {
        matches!(self, DiagError::Base { source: BaseError::IrrationalEigenvalue { .. }, .. })
    }

    pub fn is_not_orthonormalizable(&self) -> bool {
        matches!(self, DiagError::Base { source: BaseError::NotOrthonormalizable { .. }, .. })
    }
}

/// Square matrix over K with `A[i][j] == A[j][i]` exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymSeriesMatrix {
    entries: Vec<Vec<LaurentSeries>>,
}

impl SymSeriesMatrix {
    pub fn new(entries: Vec<Vec<LaurentSeries>>) -> Result<Self, DiagError> {
        let n = entries.len();
        if entries.iter().any(|r| r.len() != n) {
            return Err(DiagError::NotSymmetric);
        }
        for i in 0..n {
            for j in 0..i {
                if entries[i][j] != entries[j][i] {
                    return Err(DiagError::NotSymmetric);
                }
            }
        }
        Ok(SymSeriesMatrix { entries })
    }

    /// Builds from the upper triangle `f(i, j)`, `i ≤ j`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> LaurentSeries) -> Self {
        let mut entries = vec![vec![LaurentSeries::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                entries[j][i] = v.clone();
                entries[i][j] = v;
            }
        }
        SymSeriesMatrix { entries }
    }

    pub fn diagonal(d: Vec<LaurentSeries>) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i].clone() } else { LaurentSeries::zero() })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &LaurentSeries {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<LaurentSeries>] {
        &self.entries
    }

    /// Minimum absolute precision over entries; `None` if all are exact.
    pub fn precision(&self) -> Option<i64> {
        self.entries.iter().flatten().filter_map(|s| s.precision()).min()
    }

    pub fn valuation(&self) -> Valuation {
        self.entries.iter().flatten().fold(Valuation::Infinite, |v, s| v.min_norm(s.valuation()))
    }

    /// All off-diagonal entries are exact zeros.
    pub fn is_diagonal(&self) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..n).all(|j| i == j || self.entries[i][j] == LaurentSeries::zero()))
    }

    pub fn diagonal_entries(&self) -> Vec<LaurentSeries> {
        (0..self.size()).map(|i| self.entries[i][i].clone()).collect()
    }

    /// `PᵀAP` for the permutation sending coordinate `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.size(), |i, j| self.entries[perm[i]][perm[j]].clone())
    }

    pub fn truncate(&self, n: i64) -> Self {
        SymSeriesMatrix { entries: self.entries.iter().map(|r| r.iter().map(|s| s.truncate(n)).collect()).collect() }
    }
}

impl fmt::Display for SymSeriesMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.entries {
            let cells: Vec<String> = row.iter().map(|s| s.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Columns are pairwise orthogonal to the stated precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrthSeriesMatrix {
    entries: Vec<Vec<LaurentSeries>>,
}

impl OrthSeriesMatrix {
    pub fn from_entries(entries: Vec<Vec<LaurentSeries>>) -> Self {
        OrthSeriesMatrix { entries }
    }

    pub fn identity(n: usize) -> Self {
        let entries =
            (0..n).map(|i| (0..n).map(|j| if i == j { LaurentSeries::one() } else { LaurentSeries::zero() }).collect()).collect();
        OrthSeriesMatrix { entries }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &LaurentSeries {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<LaurentSeries>] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [Vec<LaurentSeries>] {
        &mut self.entries
    }

    pub fn column(&self, j: usize) -> Vec<LaurentSeries> {
        self.entries.iter().map(|r| r[j].clone()).collect()
    }

    pub fn precision(&self) -> Option<i64> {
        self.entries.iter().flatten().filter_map(|s| s.precision()).min()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LevelKind {
    /// 1×1, or nothing left below the target precision.
    Trivial,
    /// Leading coefficient was this multiple of the metric and got removed.
    Scalar(Rational),
    /// Coordinates split into groups of these sizes; `coupling` bounds the
    /// valuation of what remains between groups.
    Split { groups: Vec<usize>, coupling: Valuation },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelRecord {
    /// Group indices leading from the whole matrix to this block.
    pub path: Vec<usize>,
    pub size: usize,
    /// Valuation of the block's leading coefficient in the original matrix.
    pub offset: i64,
    pub kind: LevelKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub requested: i64,
    /// Below this order the result is exact; lower than `requested` only when
    /// the input itself is known to less.
    pub certified: i64,
    pub levels: Vec<LevelRecord>,
    pub orthogonality: Valuation,
    pub off_diagonal: Valuation,
}

#[derive(Clone, Debug)]
pub struct DiagResult {
    pub u: OrthSeriesMatrix,
    /// Diagonal of `UᵀAU`.
    pub d: SymSeriesMatrix,
    /// `⟨u_j, u_j⟩`; all ones for [`diagonalize`].
    pub gram: Vec<Rational>,
    pub certificate: Certificate,
    pub factor_set: FactorSet,
}

impl DiagResult {
    /// `D_jj / gram_j`; equal to `D_jj` for [`diagonalize`].
    pub fn eigenvalues(&self) -> Vec<LaurentSeries> {
        self.d.diagonal_entries().into_iter().zip(&self.gram).map(|(d, g)| d.scale(&(Rational::one() / g))).collect()
    }
}

/// Outcome of [`normalize_leading`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Leading {
    Scalar { gamma0: i64, value: Rational },
    Split {
        gamma0: i64,
        /// Orthogonal change of basis, already including the grouping permutation.
        w: RatMatrix,
        diagonal: Vec<Rational>,
        r: usize,
        /// `t^{−γ₀}·WᵀAW`, leading coefficient `diag(diagonal)`.
        a: SymSeriesMatrix,
    },
}

enum Lead {
    Scalar(Rational),
    Split { w: QMat, d: Vec<Rational>, gram: Vec<Rational>, sizes: Vec<usize> },
}

fn lead_step(
    b0: &QMat,
    hints: &[RatMatrix],
    metric: &[Rational],
    strict: bool,
    oracle: &dyn BaseDiagOracle,
) -> Result<Lead, BaseError> {
    if b0.off_diag_zero() {
        let d = b0.diag();
        let first = &d[0] / &metric[0];
        if d.iter().zip(metric).all(|(x, g)| x / g == first) {
            return Ok(Lead::Scalar(first));
        }
    }
    let res = oracle.diagonalize(&b0.to_rat(), metric, hints, strict)?;
    // Stable grouping by first occurrence of each eigenvalue.
    let mut order: Vec<usize> = Vec::new();
    let mut sizes = Vec::new();
    let mut seen: Vec<&Rational> = Vec::new();
    for ev in &res.eigenvalues {
        if seen.contains(&ev) {
            continue;
        }
        seen.push(ev);
        let members: Vec<usize> = (0..res.eigenvalues.len()).filter(|&k| &res.eigenvalues[k] == ev).collect();
        sizes.push(members.len());
        order.extend(members);
    }
    let cols: Vec<Vec<Rational>> = order.iter().map(|&k| res.o.column(k)).collect();
    Ok(Lead::Split {
        w: QMat::from_rat(&RatMatrix::from_columns(&cols)),
        d: order.iter().map(|&k| res.eigenvalues[k].clone()).collect(),
        gram: order.iter().map(|&k| res.gram[k].clone()).collect(),
        sizes,
    })
}

// Coefficients of t^{−γ}·a at exponents 0.., as known.
fn shifted(a: &MatSeries, gamma: i64, len: i64, c: &FactorSet) -> Vec<QMat> {
    (0..len)
        .map_while(|e| a.coeff(e + gamma).map(|m| if c.is_trivial() { m.clone() } else { m.scale(&c.eval(-gamma, e + gamma)) }))
        .collect()
}

/// Scales `A` to valuation 0, diagonalizes the leading coefficient and groups
/// the eigenvalue of the first column into a leading `r × r` block.
pub fn normalize_leading(a: &SymSeriesMatrix, c: &FactorSet, oracle: &dyn BaseDiagOracle) -> Result<Leading, DiagError> {
    let Some(gamma0) = a.valuation().finite() else { return Err(DiagError::PrecisionExhausted) };
    let prec = a.precision().unwrap_or(gamma0 + 3);
    let am = MatSeries::from_entries(a.entries(), gamma0, prec);
    let b = shifted(&am, gamma0, prec - gamma0, c);
    let hints: Vec<RatMatrix> = b.iter().skip(1).take(2).map(|m| m.to_rat()).collect();
    let ones = vec![Rational::one(); a.size()];
    match lead_step(&b[0], &hints, &ones, true, oracle).map_err(|source| DiagError::Base { path: vec![], source })? {
        Lead::Scalar(value) => Ok(Leading::Scalar { gamma0, value }),
        Lead::Split { w, d, sizes, .. } => {
            let wt = w.transpose();
            let bw = MatSeries {
                rows: a.size(),
                cols: a.size(),
                start: 0,
                coeffs: b.iter().map(|m| wt.mul(m).mul(&w)).collect(),
            };
            let prec_out = a.precision().map(|p| p - gamma0);
            let entries = bw.to_entries(prec_out);
            Ok(Leading::Split {
                gamma0,
                w: w.to_rat(),
                diagonal: d,
                r: sizes[0],
                a: SymSeriesMatrix { entries },
            })
        }
    }
}

struct Solved {
    u: Vec<QMat>,
    gram: Vec<Rational>,
    identity: bool,
}

struct Engine<'a> {
    c: &'a FactorSet,
    oracle: &'a dyn BaseDiagOracle,
    strict: bool,
    len: i64,
    target: i64,
    levels: Vec<LevelRecord>,
}

impl Engine<'_> {
    fn identity(&self, n: usize, metric: &[Rational]) -> Solved {
        let mut u = vec![QMat::identity(n)];
        u.resize(self.len as usize, QMat::zeros(n, n));
        Solved { u, gram: metric.to_vec(), identity: true }
    }

    fn solve(&mut self, a: &MatSeries, metric: &[Rational], offset: i64, path: Vec<usize>) -> Result<Solved, DiagError> {
        let n = a.rows;
        let gamma = a.valuation();
        let trivial = n == 1 || gamma.is_none_or(|g| offset + g >= self.target);
        if trivial {
            self.levels.push(LevelRecord { path, size: n, offset: offset + gamma.unwrap_or(0), kind: LevelKind::Trivial });
            return Ok(self.identity(n, metric));
        }
        let gamma = gamma.unwrap();
        let off = offset + gamma;
        let mut b = shifted(a, gamma, self.len, self.c);
        let hints: Vec<RatMatrix> = b.iter().skip(1).take(2).map(|m| m.to_rat()).collect();
        let lead = lead_step(&b[0], &hints, metric, self.strict, self.oracle)
            .map_err(|source| DiagError::Base { path: path.clone(), source })?;
        match lead {
            Lead::Scalar(value) => {
                self.levels.push(LevelRecord { path: path.clone(), size: n, offset: off, kind: LevelKind::Scalar(value) });
                b[0] = QMat::zeros(n, n);
                let stripped = MatSeries { rows: n, cols: n, start: 0, coeffs: b };
                self.solve(&stripped, metric, off, path)
            }
            Lead::Split { w, d, gram, sizes } => {
                let wt = w.transpose();
                let bw: Vec<QMat> = b.iter().map(|m| wt.mul(m).mul(&w)).collect();
                let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(k, &s)| std::iter::repeat_n(k, s)).collect();
                let g = if self.strict { None } else { Some(gram.clone()) };
                let mut lp = order::OrderLoop::with_metric(bw, d, g, labels, self.c);
                while lp.order() < self.len {
                    lp.advance()?;
                }
                self.levels.push(LevelRecord {
                    path: path.clone(),
                    size: n,
                    offset: off,
                    kind: LevelKind::Split { groups: sizes.clone(), coupling: Valuation::Unknown(off + self.len) },
                });
                let mut subs = Vec::new();
                let mut start = 0;
                for (k, &s) in sizes.iter().enumerate() {
                    let block = MatSeries {
                        rows: s,
                        cols: s,
                        start: 0,
                        coeffs: lp.conjugated().iter().map(|m| m.submatrix(start..start + s, start..start + s)).collect(),
                    };
                    let mut p = path.clone();
                    p.push(k);
                    subs.push(self.solve(&block, &gram[start..start + s], off, p)?);
                    start += s;
                }
                let wu: Vec<QMat> =
                    if w.is_identity() { lp.u().to_vec() } else { lp.u().iter().map(|u| w.mul(u)).collect() };
                let u = if subs.iter().all(|s| s.identity) {
                    wu
                } else {
                    let y = MatSeries {
                        rows: n,
                        cols: n,
                        start: 0,
                        coeffs: (0..self.len as usize)
                            .map(|k| QMat::block_diag(&subs.iter().map(|s| &s.u[k]).collect::<Vec<_>>()))
                            .collect(),
                    };
                    let x = MatSeries { rows: n, cols: n, start: 0, coeffs: wu };
                    x.mul(&y, self.c, self.len).coeffs
                };
                let gram = subs.into_iter().flat_map(|s| s.gram).collect();
                Ok(Solved { u, gram, identity: false })
            }
        }
    }
}

/// Orthogonal `U` (`UᵀU = I`) with `UᵀAU` diagonal, both modulo `t^N`.
pub fn diagonalize(a: &SymSeriesMatrix, n: i64, c: &FactorSet, oracle: &dyn BaseDiagOracle) -> Result<DiagResult, DiagError> {
    run(a, n, c, oracle, true)
}

/// Like [`diagonalize`] but only asks for orthogonal columns: `UᵀU` is the
/// constant diagonal `gram`. Succeeds whenever the residue eigenvalues are
/// rational.
pub fn diagonalize_orthogonal(
    a: &SymSeriesMatrix,
    n: i64,
    c: &FactorSet,
    oracle: &dyn BaseDiagOracle,
) -> Result<DiagResult, DiagError> {
    run(a, n, c, oracle, false)
}

// First exponent below `below` where `bad` flags an entry.
fn residual(m: &MatSeries, below: i64, bad: impl Fn(i64, &QMat, usize, usize) -> bool) -> Valuation {
    for (k, q) in m.coeffs.iter().enumerate() {
        let e = m.start + k as i64;
        if e >= below {
            break;
        }
        for i in 0..q.rows() {
            for j in 0..q.cols() {
                if bad(e, q, i, j) {
                    return Valuation::Finite(e);
                }
            }
        }
    }
    Valuation::Unknown(below)
}

fn gram_mismatch(gram: &[Rational]) -> impl Fn(i64, &QMat, usize, usize) -> bool + '_ {
    move |e, q, i, j| {
        if e == 0 && i == j {
            q.get(i, j) != gram[i]
        } else {
            !q.entry_is_zero(i, j)
        }
    }
}

fn run(a: &SymSeriesMatrix, n: i64, c: &FactorSet, oracle: &dyn BaseDiagOracle, strict: bool) -> Result<DiagResult, DiagError> {
    let size = a.size();
    let prec = a.precision();
    let certified = prec.map_or(n, |p| p.min(n));
    if a.is_diagonal() {
        return Ok(DiagResult {
            u: OrthSeriesMatrix::identity(size),
            d: a.clone(),
            gram: vec![Rational::one(); size],
            certificate: Certificate {
                requested: n,
                certified,
                levels: vec![LevelRecord { path: vec![], size, offset: 0, kind: LevelKind::Trivial }],
                orthogonality: Valuation::Infinite,
                off_diagonal: Valuation::Infinite,
            },
            factor_set: c.clone(),
        });
    }
    let Some(g0) = a.valuation().finite() else { return Err(DiagError::PrecisionExhausted) };
    let len = n.max(n - g0).max(1);
    let end = prec.map_or(g0 + len, |p| p.min(g0 + len));
    let am = MatSeries::from_entries(a.entries(), g0, end);
    let mut eng = Engine { c, oracle, strict, len, target: n, levels: Vec::new() };
    let ones = vec![Rational::one(); size];
    let sol = eng.solve(&am, &ones, 0, Vec::new())?;
    let x = MatSeries { rows: size, cols: size, start: 0, coeffs: sol.u };
    let xtx = x.transpose().mul(&x, c, len);
    let orthogonality = residual(&xtx, len, gram_mismatch(&sol.gram));
    let conj = x.transpose().mul(&am.mul(&x, c, n), c, n);
    let off_diagonal = residual(&conj, certified, |_, q, i, j| i != j && !q.entry_is_zero(i, j));
    if orthogonality.finite().is_some() || off_diagonal.finite().is_some() {
        return Err(DiagError::InvariantViolation(format!(
            "assembled transform leaves residuals {orthogonality} / {off_diagonal}"
        )));
    }
    let dm = conj.to_entries(Some(certified));
    let d = SymSeriesMatrix::diagonal((0..size).map(|i| dm[i][i].clone()).collect());
    Ok(DiagResult {
        u: OrthSeriesMatrix { entries: x.to_entries(Some(len)) },
        d,
        gram: sol.gram,
        certificate: Certificate { requested: n, certified, levels: eng.levels, orthogonality, off_diagonal },
        factor_set: c.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub target: i64,
    /// First order where `UᵀU` differs from `diag(gram)`, or `≥ target`.
    pub orthogonality: Valuation,
    pub off_diagonal: Valuation,
    /// First order where `diag(UᵀAU)` differs from `D`.
    pub diagonal: Valuation,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn min_residual(&self) -> Valuation {
        self.orthogonality.min_norm(self.off_diagonal).min_norm(self.diagonal)
    }
}

fn entries_start_end(entries: &[Vec<LaurentSeries>]) -> (i64, i64) {
    let all = entries.iter().flatten();
    let start = all.clone().filter_map(|s| s.lead().map(|l| l.0)).min().unwrap_or(0).min(0);
    let end = all
        .clone()
        .map(|s| s.precision().unwrap_or_else(|| s.max_exponent().map_or(start + 1, |e| e + 1)))
        .max()
        .unwrap_or(start + 1);
    (start, end)
}

/// Rechecks `UᵀU = diag(gram)`, `UᵀAU` diagonal and equal to `D`, all below `t^N`.
pub fn verify(result: &DiagResult, a: &SymSeriesMatrix, n: i64) -> VerifyReport {
    let c = &result.factor_set;
    let mut failures = Vec::new();
    let size = a.size();
    if result.u.size() != size || result.d.size() != size || result.gram.len() != size {
        failures.push("dimension mismatch".to_string());
        return VerifyReport {
            target: n,
            orthogonality: Valuation::Unknown(0),
            off_diagonal: Valuation::Unknown(0),
            diagonal: Valuation::Unknown(0),
            failures,
        };
    }
    let a_val = a.valuation().lower_bound().unwrap_or(0);
    let need_u = n - a_val.min(0);
    if let Some(p) = result.u.precision() {
        if p < need_u {
            failures.push(format!("U is known only below t^{p}, t^{need_u} needed"));
        }
    }
    if let Some(p) = a.precision() {
        if p < n {
            failures.push(format!("A is known only below t^{p}"));
        }
    }
    let (us, ue) = entries_start_end(result.u.entries());
    let u = MatSeries::from_entries(result.u.entries(), us, ue);
    let (as_, ae) = entries_start_end(a.entries());
    let am = MatSeries::from_entries(a.entries(), as_, ae);
    let utu = u.transpose().mul(&u, c, n);
    let orthogonality = residual(&utu, n, gram_mismatch(&result.gram));
    let conj = u.transpose().mul(&am.mul(&u, c, n), c, n);
    let off_diagonal = residual(&conj, n, |_, q, i, j| i != j && !q.entry_is_zero(i, j));
    let d_prec = result.d.precision().map_or(n, |p| p.min(n));
    let d_entries = result.d.entries();
    let d_off = (0..size).any(|i| (0..size).any(|j| i != j && !d_entries[i][j].vanishes_below(n)));
    if d_off {
        failures.push("D is not diagonal".to_string());
    }
    let diagonal = residual(&conj, d_prec, |e, q, i, j| i == j && q.get(i, j) != d_entries[i][i].coeff(e));
    // Coefficients of D below the first computed exponent.
    let diagonal = (0..size)
        .filter_map(|i| d_entries[i][i].lead().map(|l| l.0))
        .filter(|&e| e < conj.start)
        .min()
        .map_or(diagonal, Valuation::Finite);
    if d_prec < n {
        failures.push(format!("D is known only below t^{d_prec}"));
    }
    for (name, v) in [("U^T U", orthogonality), ("off-diagonal of U^T A U", off_diagonal), ("diag(U^T A U) - D", diagonal)] {
        if let Some(e) = v.finite() {
            failures.push(format!("{name} has a nonzero coefficient at t^{e}"));
        }
    }
    VerifyReport { target: n, orthogonality, off_diagonal, diagonal, failures }
}
