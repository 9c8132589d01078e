//! Spectral decomposition of self-adjoint operators on c₀.
//!
//! For self-adjoint `T` the nonzero point spectrum is grouped by `|λ|` into
//! levels, and
//!
//! ```text
//! T(x) = Σ λₙ ⟨x, xₙ⟩/⟨xₙ, xₙ⟩ xₙ
//! ```
//!
//! with the `xₙ` pairwise orthogonal eigenvectors. Level keys are valuations,
//! so the largest `|λ|` comes first.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hahn::{diagonalize_orthogonal, gen_test_matrix, DiagError, RationalRootOracle, SymSeriesMatrix};
use crate::linalg::{inner, norm_val, normal_projection, LinalgError, OrthoBasis, VectorC0};
use crate::operators::{apply, compose, is_self_adjoint, op_norm_val, OperatorC0};
use crate::scalars::{rat, FactorSet, LaurentSeries, ScalarError, Valuation};
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpectralError {
    #[error("operator is not self-adjoint")]
    NotSelfAdjoint,
    #[error("diagonalization failed: {0}")]
    Diag(#[from] DiagError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("span is not invariant: T maps basis vector {index} outside it")]
    NotInvariant { index: usize },
}

/// An eigenvalue with an orthogonal basis of its eigenspace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EigenPair {
    pub lambda: LaurentSeries,
    pub vectors: Vec<VectorC0>,
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Absolute precision of the eigenvalues.
    pub precision: i64,
    /// Valuation of `λ` to the eigenpairs of that magnitude.
    pub levels: BTreeMap<i64, Vec<EigenPair>>,
    /// Eigenvectors whose eigenvalue vanishes to precision.
    pub kernel: Vec<VectorC0>,
}

impl SpectralDecomposition {
    /// `(λₙ, xₙ)` in level order.
    pub fn flat(&self) -> Vec<(LaurentSeries, VectorC0)> {
        self.levels
            .values()
            .flatten()
            .flat_map(|p| p.vectors.iter().map(move |v| (p.lambda.clone(), v.clone())))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.levels.values().flatten().map(|p| p.vectors.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// The operator `Σ λₙ/⟨xₙ, xₙ⟩ · xₙxₙᵀ` as a sparse matrix.
    pub fn reconstructor(&self) -> Result<Reconstructor, SpectralError> {
        let mut entries: BTreeMap<(usize, usize), LaurentSeries> = BTreeMap::new();
        for (lambda, x) in self.flat() {
            let c = &lambda * &inner(&x, &x).inv()?;
            for (i, xi) in x.entries() {
                let cxi = &c * xi;
                for (j, xj) in x.entries() {
                    let e = entries.entry((i, j)).or_insert_with(LaurentSeries::zero);
                    *e = &*e + &(&cxi * xj);
                }
            }
        }
        Ok(Reconstructor { entries })
    }

    /// `Σ λₙ ⟨x, xₙ⟩/⟨xₙ, xₙ⟩ xₙ`.
    pub fn reconstruct(&self, x: &VectorC0) -> Result<VectorC0, SpectralError> {
        Ok(self.reconstructor()?.apply(x))
    }

    /// Eigenvalue valuations in level order, with multiplicity.
    pub fn valuations(&self) -> Vec<i64> {
        self.levels.iter().flat_map(|(v, ps)| std::iter::repeat_n(*v, ps.iter().map(|p| p.vectors.len()).sum())).collect()
    }
}

pub struct Reconstructor {
    entries: BTreeMap<(usize, usize), LaurentSeries>,
}

impl Reconstructor {
    pub fn apply(&self, x: &VectorC0) -> VectorC0 {
        let mut rows: BTreeMap<usize, LaurentSeries> = BTreeMap::new();
        for ((i, j), r) in &self.entries {
            let xj = x.get(*j);
            if xj.is_exact() && xj.is_zero_to_precision() {
                continue;
            }
            let e = rows.entry(*i).or_insert_with(LaurentSeries::zero);
            *e = &*e + &(r * &xj);
        }
        VectorC0::from_entries(rows)
    }
}

struct RawEigen {
    precision: i64,
    pairs: Vec<EigenPair>,
    kernel: Vec<VectorC0>,
}

fn eigen_system(t: &OperatorC0, n: i64) -> Result<RawEigen, SpectralError> {
    if !is_self_adjoint(t) {
        return Err(SpectralError::NotSelfAdjoint);
    }
    let d = t.dim();
    let mut precision = n;
    let mut found: Vec<(LaurentSeries, VectorC0)> = Vec::new();
    let mut kernel = Vec::new();
    if d > 0 {
        let a = SymSeriesMatrix::from_fn(d, |i, j| t.block()[i][j].clone());
        if a.valuation().finite().is_none() {
            kernel.extend((1..=d).map(VectorC0::basis));
            precision = precision.min(a.precision().unwrap_or(n));
        } else {
            let r = diagonalize_orthogonal(&a, n, &FactorSet::trivial(), &RationalRootOracle)?;
            precision = r.certificate.certified;
            let lambdas = r.eigenvalues();
            for (j, lambda) in lambdas.iter().cloned().enumerate() {
                // UᵀAU is diagonal below t^precision, which pins column j
                // only up to its gap to the nearest different eigenvalue.
                let gap = lambdas
                    .iter()
                    .filter_map(|mu| {
                        let d = &lambda - mu;
                        (!d.is_zero_to_precision()).then(|| d.valuation().lower_bound()).flatten()
                    })
                    .max()
                    .unwrap_or(0)
                    .max(0);
                let mut v = VectorC0::from_dense(&r.u.column(j));
                if v.precision().is_some() {
                    v = v.truncate(precision - gap);
                }
                if lambda.is_zero_to_precision() {
                    kernel.push(v);
                } else {
                    found.push((lambda, v));
                }
            }
        }
    }
    for (i, s) in t.tail() {
        found.push((s.clone(), VectorC0::basis(*i)));
    }
    let mut pairs: Vec<EigenPair> = Vec::new();
    for (lambda, v) in found {
        match pairs.iter_mut().find(|p| (&p.lambda - &lambda).is_zero_to_precision()) {
            Some(p) => p.vectors.push(v),
            None => pairs.push(EigenPair { lambda, vectors: vec![v] }),
        }
    }
    Ok(RawEigen { precision, pairs, kernel })
}

/// Nonzero eigenvalues of a self-adjoint `T` with orthogonal eigenbases:
/// block pairs from an orthogonal diagonalization, tail pairs `(dᵢ, eᵢ)`.
pub fn eigen_decompose(t: &OperatorC0, n: i64) -> Result<Vec<EigenPair>, SpectralError> {
    Ok(eigen_system(t, n)?.pairs)
}

pub fn spectral_decompose(t: &OperatorC0, n: i64) -> Result<SpectralDecomposition, SpectralError> {
    let raw = eigen_system(t, n)?;
    let mut levels: BTreeMap<i64, Vec<EigenPair>> = BTreeMap::new();
    for p in raw.pairs {
        let v = p.lambda.valuation().finite().expect("nonzero eigenvalues have a finite valuation");
        levels.entry(v).or_default().push(p);
    }
    Ok(SpectralDecomposition { precision: raw.precision, levels, kernel: raw.kernel })
}

/// Checks `T(x)` against the decomposition sum on `e_i` for every active
/// index and on the given probes, each below `t^{precision + v(x)}`.
pub fn verify_reconstruction(t: &OperatorC0, dec: &SpectralDecomposition, probes: &[VectorC0]) -> Verdict {
    const NAME: &str = "reconstruction";
    let rec = match dec.reconstructor() {
        Ok(r) => r,
        Err(e) => return Verdict::fail(NAME, e.to_string()),
    };
    let canon: Vec<VectorC0> = t.active_indices().into_iter().map(VectorC0::basis).collect();
    let mut weakest: Option<i64> = None;
    for (k, x) in canon.iter().chain(probes).enumerate() {
        let shift = norm_val(x).lower_bound().unwrap_or(0);
        let diff = apply(t, x).sub(&rec.apply(x));
        if !diff.is_zero_to_precision() {
            return Verdict::fail(NAME, format!("probe {k} differs: {diff}"));
        }
        // Relative to the probe's norm, capped at the target.
        if let Some(p) = diff.precision() {
            let rel = (p - shift).min(dec.precision);
            weakest = Some(weakest.map_or(rel, |w| w.min(rel)));
        }
    }
    let known = weakest.map_or(String::new(), |w| format!(" below t^{w}"));
    Verdict::pass(NAME, format!("{} probes agree{known}", canon.len() + probes.len()))
}

/// `‖T‖ = max |λ|` on the point spectrum, and the weaker `‖T‖ ≤ |t|⁻¹ max |λ|`.
pub fn verify_norm_max(t: &OperatorC0, dec: &SpectralDecomposition) -> Verdict {
    const NAME: &str = "norm equals max eigenvalue";
    let norm = op_norm_val(t);
    let top = dec.levels.keys().next().copied();
    match (norm, top) {
        (Valuation::Infinite, None) => Verdict::pass(NAME, "zero operator"),
        (Valuation::Finite(v), Some(r)) => {
            let weak = v >= r - 1;
            Verdict::check(NAME, v == r && weak, format!("v(T) = {v}, min v(lambda) = {r}"))
        }
        (norm, top) => Verdict::fail(NAME, format!("v(T) = {norm}, min v(lambda) = {top:?}")),
    }
}

/// `‖T²‖ = ‖T‖²`.
pub fn verify_square_norm(t: &OperatorC0) -> Verdict {
    verify_square_norm_of(t, &compose(t, t))
}

/// Same check against a precomputed `square`.
pub fn verify_square_norm_of(t: &OperatorC0, square: &OperatorC0) -> Verdict {
    const NAME: &str = "square norm";
    let v = op_norm_val(t);
    let v2 = op_norm_val(square);
    let ok = match (v, v2) {
        (Valuation::Finite(a), Valuation::Finite(b)) => b == 2 * a,
        (Valuation::Infinite, Valuation::Infinite) => true,
        _ => false,
    };
    Verdict::check(NAME, ok, format!("v(T) = {v}, v(T^2) = {v2}"))
}

/// Every two distinct eigenvectors are ⟨,⟩-orthogonal below `t^precision`.
pub fn verify_eigenspace_orthogonality(dec: &SpectralDecomposition) -> Verdict {
    const NAME: &str = "eigenspace orthogonality";
    let vs: Vec<VectorC0> = dec.flat().into_iter().map(|(_, v)| v).chain(dec.kernel.iter().cloned()).collect();
    let mut weakest: Option<i64> = None;
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            let p = inner(&vs[i], &vs[j]);
            if !p.is_zero_to_precision() {
                return Verdict::fail(NAME, format!("<x{i}, x{j}> = {p}"));
            }
            let known = p.precision().unwrap_or(dec.precision).min(dec.precision);
            weakest = Some(weakest.map_or(known, |w| w.min(known)));
        }
    }
    match weakest {
        Some(w) => Verdict::pass(NAME, format!("{} vectors pairwise orthogonal below t^{w}", vs.len())),
        None => Verdict::pass(NAME, format!("{} vectors pairwise orthogonal", vs.len())),
    }
}

fn index_set(t: &OperatorC0, basis: &OrthoBasis) -> BTreeSet<usize> {
    let mut idx: BTreeSet<usize> = t.active_indices().into_iter().collect();
    for v in &basis.vectors {
        idx.extend(v.support());
    }
    idx
}

/// For an invariant `M = span(basis)` with normal projection `P`: `TP = PT`
/// column by column, and `P(T(q)) = 0` for `q = (I − P)eⱼ`.
pub fn verify_commuting_projection(t: &OperatorC0, basis: &OrthoBasis) -> Result<Verdict, SpectralError> {
    const NAME: &str = "projection commutes";
    for (k, b) in basis.vectors.iter().enumerate() {
        let tb = apply(t, b);
        if !tb.sub(&normal_projection(basis, &tb)?).is_zero_to_precision() {
            return Err(SpectralError::NotInvariant { index: k });
        }
    }
    for j in index_set(t, basis) {
        let e = VectorC0::basis(j);
        let pe = normal_projection(basis, &e)?;
        let tp = apply(t, &pe);
        let te = apply(t, &e);
        let pt = normal_projection(basis, &te)?;
        if !tp.sub(&pt).is_zero_to_precision() {
            return Ok(Verdict::fail(NAME, format!("column {j}: TP - PT = {}", tp.sub(&pt))));
        }
        let q = e.sub(&pe);
        let leak = normal_projection(basis, &apply(t, &q))?;
        if !leak.is_zero_to_precision() {
            return Ok(Verdict::fail(NAME, format!("T moves the complement probe at {j} by {leak}")));
        }
    }
    Ok(Verdict::pass(NAME, format!("{} basis vectors", basis.len())))
}

/// Every eigenspace projection of the decomposition commutes with `T`.
pub fn verify_all_projections(t: &OperatorC0, dec: &SpectralDecomposition) -> Verdict {
    const NAME: &str = "eigenspace projections commute";
    for (k, p) in dec.levels.values().flatten().enumerate() {
        let basis = match OrthoBasis::from_orthogonal(p.vectors.clone()) {
            Ok(b) => b,
            Err(e) => return Verdict::fail(NAME, format!("eigenpair {k}: {e}")),
        };
        match verify_commuting_projection(t, &basis) {
            Ok(v) if v.passed => {}
            Ok(v) => return Verdict::fail(NAME, format!("eigenpair {k}: {}", v.detail)),
            Err(e) => return Verdict::fail(NAME, format!("eigenpair {k}: {e}")),
        }
    }
    Verdict::pass(NAME, format!("{} eigenspaces", dec.levels.values().map(Vec::len).sum::<usize>()))
}

/// `v(T∘Qₙ)` after removing the first `n` levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailNorm {
    pub level: i64,
    pub value: Valuation,
    /// Valuation of the next level, if any.
    pub next: Option<i64>,
    pub bound_holds: bool,
}

pub fn tail_projection_norms(t: &OperatorC0, dec: &SpectralDecomposition) -> Result<Vec<TailNorm>, SpectralError> {
    let keys: Vec<i64> = dec.levels.keys().copied().collect();
    let mut vectors = Vec::new();
    let mut out = Vec::new();
    for (k, (level, pairs)) in dec.levels.iter().enumerate() {
        vectors.extend(pairs.iter().flat_map(|p| p.vectors.iter().cloned()));
        let basis = OrthoBasis::from_orthogonal(vectors.clone())?;
        let mut value = Valuation::Infinite;
        for j in index_set(t, &basis) {
            let e = VectorC0::basis(j);
            let q = e.sub(&normal_projection(&basis, &e)?);
            value = value.min_norm(norm_val(&apply(t, &q)));
        }
        let next = keys.get(k + 1).copied();
        let bound_holds = match next {
            // A value that only vanishes to its known precision cannot refute the bound.
            Some(r) => value.finite().is_none_or(|v| v >= r.min(dec.precision)),
            None => value.finite().is_none(),
        };
        out.push(TailNorm { level: *level, value, next, bound_holds });
    }
    Ok(out)
}

/// Bounds hold and the tail norms strictly increase.
pub fn verify_tail_norms(norms: &[TailNorm]) -> Verdict {
    const NAME: &str = "tail projection norms";
    if let Some(b) = norms.iter().find(|n| !n.bound_holds) {
        return Verdict::fail(NAME, format!("after level {}: v = {}, next = {:?}", b.level, b.value, b.next));
    }
    for w in norms.windows(2) {
        if let (Some(a), Some(b)) = (w[0].value.finite(), w[1].value.lower_bound()) {
            if b <= a {
                return Verdict::fail(NAME, format!("not increasing: {} then {}", w[0].value, w[1].value));
            }
        }
    }
    let seq: Vec<String> = norms.iter().map(|n| n.value.to_string()).collect();
    if seq.is_empty() {
        return Verdict::pass(NAME, "no levels");
    }
    Verdict::pass(NAME, seq.join(", "))
}

/// Level keys match the eigenvalue valuations and increase strictly.
pub fn verify_eigs_tend_to_zero(dec: &SpectralDecomposition) -> Verdict {
    const NAME: &str = "eigenvalues tend to zero";
    for (v, pairs) in &dec.levels {
        for p in pairs {
            if p.lambda.valuation() != Valuation::Finite(*v) {
                return Verdict::fail(NAME, format!("eigenvalue {} filed under valuation {v}", p.lambda));
            }
        }
    }
    let vals = dec.valuations();
    if vals.windows(2).any(|w| w[1] < w[0]) {
        return Verdict::fail(NAME, format!("valuations out of order: {vals:?}"));
    }
    Verdict::pass(NAME, format!("{} levels", dec.levels.len()))
}

#[derive(Clone, Debug)]
pub struct NormalizationFailure {
    pub lambda: LaurentSeries,
    pub vector: VectorC0,
    pub error: ScalarError,
}

/// Eigenvectors rescaled to `⟨xₙ, xₙ⟩ = 1`, so `T(x) = Σ λₙ ⟨x, xₙ⟩ xₙ`.
/// Vectors whose self inner product has no square root are set aside.
#[derive(Clone, Debug)]
pub struct NormalizedDecomposition {
    pub precision: i64,
    pub levels: BTreeMap<i64, Vec<EigenPair>>,
    pub failures: Vec<NormalizationFailure>,
}

impl NormalizedDecomposition {
    pub fn flat(&self) -> Vec<(LaurentSeries, VectorC0)> {
        self.levels
            .values()
            .flatten()
            .flat_map(|p| p.vectors.iter().map(move |v| (p.lambda.clone(), v.clone())))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn reconstruct(&self, x: &VectorC0) -> VectorC0 {
        let mut out = VectorC0::zero();
        for (lambda, v) in self.flat() {
            out = out.add(&v.scale(&(&inner(x, &v) * &lambda)));
        }
        out
    }
}

pub fn normalized_decomposition(dec: &SpectralDecomposition) -> NormalizedDecomposition {
    let mut levels: BTreeMap<i64, Vec<EigenPair>> = BTreeMap::new();
    let mut failures = Vec::new();
    for (v, pairs) in &dec.levels {
        for p in pairs {
            let mut vectors = Vec::new();
            for x in &p.vectors {
                match inner(x, x).hensel_sqrt().and_then(|r| r.inv()) {
                    Ok(r) => vectors.push(x.scale(&r)),
                    Err(error) => failures.push(NormalizationFailure { lambda: p.lambda.clone(), vector: x.clone(), error }),
                }
            }
            if !vectors.is_empty() {
                levels.entry(*v).or_default().push(EigenPair { lambda: p.lambda.clone(), vectors });
            }
        }
    }
    NormalizedDecomposition { precision: dec.precision, levels, failures }
}

/// Self-adjoint operator with a block of size at most 5 and at most 8 tail
/// entries. Block eigenvalues are rational at every order.
pub fn gen_self_adjoint_operator(seed: u64) -> OperatorC0 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = rng.gen_range(0..=5usize);
    let block = if b == 0 {
        Vec::new()
    } else {
        let depth = rng.gen_range(0..=3usize);
        let shift = rng.gen_range(0..=2i64);
        let a = gen_test_matrix(b, rng.gen(), depth);
        a.entries().iter().map(|r| r.iter().map(|s| s.shift(shift)).collect()).collect()
    };
    let k = rng.gen_range(0..=8usize);
    let mut tail = Vec::with_capacity(k);
    let mut idx = b;
    let mut val = rng.gen_range(-1..=2i64);
    for _ in 0..k {
        idx += rng.gen_range(1..=2usize);
        val += rng.gen_range(1..=2i64);
        let c = [-3, -2, -1, 1, 2, 3][rng.gen_range(0..6usize)];
        let mut s = LaurentSeries::monomial(rat(c), val);
        if rng.gen_bool(0.5) {
            s = &s + &LaurentSeries::monomial(rat(rng.gen_range(-2..=2)), val + rng.gen_range(1..=3));
        }
        tail.push((idx, s));
    }
    OperatorC0::new(block, tail).expect("generated tail is admissible")
}

/// Random probe supported on the active indices, entries of the form `a + b·t^k`.
pub fn random_probe(t: &OperatorC0, rng: &mut impl Rng) -> VectorC0 {
    let entries = t.active_indices().into_iter().filter_map(|i| {
        let a = rng.gen_range(-3..=3i64);
        let b = rng.gen_range(-2..=2i64);
        let s = &LaurentSeries::from_int(a) + &LaurentSeries::monomial(rat(b), rng.gen_range(1..=4));
        (!s.is_zero_to_precision()).then_some((i, s))
    });
    VectorC0::from_entries(entries.collect::<Vec<_>>())
}
