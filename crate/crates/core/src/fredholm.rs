//! Volume and resolvent instrumentation: max-modulus checks for analytic
//! functions, `Δₙ(T)` estimates, volume stability under small perturbations
//! and resolvent norm scans over a ball.
//!
//! Radii are valuations: `v_r` stands for `r = ρ^{v_r}`, so a larger `v_r`
//! is a smaller ball.

use itertools::Itertools;
use num_traits::Zero;
use rand::Rng;

use crate::linalg::{inner, norm_val, volume, LinalgError, VectorC0};
use crate::operators::{apply, is_self_adjoint, neumann_resolvent, op_norm_val, OperatorC0, OperatorError, ResolventQuery};
use crate::scalars::{rat, LaurentSeries, Rational, Valuation};
use crate::spectral::{spectral_decompose, SpectralDecomposition, SpectralError};
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FredholmError {
    #[error("sample {index} lies outside the ball")]
    SampleOutsideBall { index: usize },
    #[error("vector {index} has norm greater than 1")]
    NotInUnitBall { index: usize },
    #[error("the family has no finite volume ({0})")]
    DegenerateFamily(Valuation),
    #[error("perturbation valuation {eps_val} must exceed the volume valuation {volume}")]
    EpsilonTooLarge { eps_val: i64, volume: i64 },
    #[error("1/lambda lies in the ball for lambda = {lambda}")]
    RadiusOutsideDT { lambda: LaurentSeries, blow_up: Vec<BlowUp> },
    #[error("resolvent at mu = {mu}: {reason}")]
    Resolvent { mu: LaurentSeries, reason: String },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// `f(λ) = Σ aₙλⁿ` on the ball of radius `ρ^{radius_val}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalyticSeries {
    pub coefficients: Vec<VectorC0>,
    pub radius_val: i64,
}

impl AnalyticSeries {
    pub fn eval(&self, lambda: &LaurentSeries) -> VectorC0 {
        let mut out = VectorC0::zero();
        let mut power = LaurentSeries::one();
        for a in &self.coefficients {
            out = out.add(&a.scale(&power));
            power = &power * lambda;
        }
        out
    }

    /// `min_n v(aₙ) + n·v_r`, the valuation of `maxₙ ‖aₙ‖rⁿ`.
    pub fn max_term_val(&self) -> Valuation {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, a)| shift_val(norm_val(a), n as i64 * self.radius_val))
            .fold(Valuation::Infinite, Valuation::min_norm)
    }

    /// Per coordinate, `Σ c_n zⁿ` over the dominant terms, where `c_n` is the
    /// coefficient of `aₙ` at the critical exponent. Equality at `λ = z·t^{v_r}`
    /// holds iff one of these is nonzero at `z`.
    pub fn residue_polynomials(&self) -> Vec<(usize, Vec<Rational>)> {
        let Some(m) = self.max_term_val().finite() else { return Vec::new() };
        let idx: std::collections::BTreeSet<usize> = self.coefficients.iter().flat_map(|a| a.support()).collect();
        idx.into_iter()
            .map(|i| {
                let cs = self
                    .coefficients
                    .iter()
                    .enumerate()
                    .map(|(n, a)| a.get(i).coeff(m - n as i64 * self.radius_val))
                    .collect();
                (i, cs)
            })
            .filter(|(_, cs): &(usize, Vec<Rational>)| cs.iter().any(|c| !c.is_zero()))
            .collect()
    }
}

fn shift_val(v: Valuation, k: i64) -> Valuation {
    match v {
        Valuation::Finite(x) => Valuation::Finite(x + k),
        Valuation::Unknown(x) => Valuation::Unknown(x + k),
        Valuation::Infinite => Valuation::Infinite,
    }
}

fn format_poly(cs: &[Rational]) -> String {
    let terms: Vec<String> = cs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(n, c)| match n {
            0 => format!("{c}"),
            1 => format!("{c}*z"),
            _ => format!("{c}*z^{n}"),
        })
        .collect();
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessNotFound {
    /// Residue polynomials that vanish at every tested `c`.
    pub residue_polynomials: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxModulusReport {
    pub rhs: Valuation,
    pub sample_values: Vec<Valuation>,
    /// `‖f(λ)‖ ≤ maxₙ ‖aₙ‖rⁿ` at every sample.
    pub upper_bound_holds: bool,
    /// `(c, v(f(c·t^{v_r})))` for the first `c` attaining the maximum.
    pub witness: Result<(i64, Valuation), WitnessNotFound>,
}

impl MaxModulusReport {
    pub fn verdict(&self) -> Verdict {
        const NAME: &str = "max modulus";
        match (&self.witness, self.upper_bound_holds) {
            (_, false) => Verdict::fail(NAME, format!("a sample exceeds the bound {}", self.rhs)),
            (Ok((c, _)), true) => Verdict::pass(NAME, format!("bound {} attained at c = {c}", self.rhs)),
            (Err(w), true) => Verdict::pass(NAME, format!("bound {} holds; no witness, residues {:?}", self.rhs, w.residue_polynomials)),
        }
    }
}

/// `‖f(λ)‖ ≤ ρ^{rhs}` for every sampled valuation.
pub fn bound_holds(rhs: Valuation, values: &[Valuation]) -> bool {
    let bound = rhs.lower_bound();
    values.iter().all(|v| bound.map_or(v.is_infinite(), |b| v.at_least(b)))
}

/// Checks the ultrametric bound on every sample and searches
/// `λ* = c·t^{v_r}`, `c = 1..=grid`, for equality.
pub fn analytic_max_modulus(f: &AnalyticSeries, samples: &[LaurentSeries], grid: i64) -> Result<MaxModulusReport, FredholmError> {
    for (index, s) in samples.iter().enumerate() {
        if !s.valuation().at_least(f.radius_val) {
            return Err(FredholmError::SampleOutsideBall { index });
        }
    }
    let rhs = f.max_term_val();
    let sample_values: Vec<Valuation> = samples.iter().map(|s| norm_val(&f.eval(s))).collect();
    let upper_bound_holds = bound_holds(rhs, &sample_values);
    let mut witness = Err(WitnessNotFound {
        residue_polynomials: f.residue_polynomials().iter().map(|(_, cs)| format_poly(cs)).collect(),
    });
    if rhs.is_infinite() {
        witness = Ok((1, Valuation::Infinite));
    }
    for c in 1..=grid {
        if witness.is_ok() {
            break;
        }
        let v = norm_val(&f.eval(&LaurentSeries::monomial(rat(c), f.radius_val)));
        if v == rhs {
            witness = Ok((c, v));
        }
    }
    Ok(MaxModulusReport { rhs, sample_values, upper_bound_holds, witness })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaEstimate {
    pub n: usize,
    /// Largest `Vol(T(x₁),…,T(xₙ))` found, as a valuation.
    pub lower_bound: Valuation,
    pub witness: Vec<VectorC0>,
    /// Sum of the `n` smallest column valuations of `T`.
    pub upper_bound: Valuation,
}

impl DeltaEstimate {
    /// Gap between the bounds, in valuation.
    pub fn gap(&self) -> Option<i64> {
        Some(self.lower_bound.finite()? - self.upper_bound.finite()?)
    }
}

// Smaller valuation first; unknowns rank after finite values they exceed.
fn better(a: Valuation, b: Valuation) -> bool {
    match (a, b) {
        (_, Valuation::Infinite) => !a.is_infinite(),
        (Valuation::Infinite, _) => false,
        (Valuation::Finite(x), Valuation::Finite(y)) => x < y,
        (Valuation::Finite(x), Valuation::Unknown(y)) => x < y,
        (Valuation::Unknown(x), Valuation::Finite(y)) => x < y,
        (Valuation::Unknown(x), Valuation::Unknown(y)) => x < y,
    }
}

/// Extra precision, beyond the column bound, kept while searching for witnesses.
const DELTA_MARGIN: i64 = 12;

fn smallest_sum(mut cols: Vec<Valuation>, n: usize) -> Valuation {
    if cols.len() < n {
        return Valuation::Infinite;
    }
    cols.sort_by(|a, b| if better(*a, *b) { std::cmp::Ordering::Less } else if better(*b, *a) { std::cmp::Ordering::Greater } else { std::cmp::Ordering::Equal });
    cols[..n].iter().fold(Valuation::Finite(0), |acc, v| match (acc, v) {
        (Valuation::Infinite, _) | (_, Valuation::Infinite) => Valuation::Infinite,
        (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
        (a, b) => Valuation::Unknown(a.lower_bound().unwrap() + b.lower_bound().unwrap()),
    })
}

fn volume_or_unknown(vs: &[VectorC0]) -> Valuation {
    match volume(vs) {
        Ok(v) => v,
        Err(_) => Valuation::Unknown(i64::MIN),
    }
}

/// Brute force over `n`-subsets of canonical vectors on the active
/// coordinates, plus caller-supplied tuples of unit-ball vectors.
pub fn delta_n_estimate(t: &OperatorC0, n: usize, extra_witnesses: &[Vec<VectorC0>]) -> Result<DeltaEstimate, FredholmError> {
    assert!(n >= 1);
    for tuple in extra_witnesses {
        assert_eq!(tuple.len(), n, "witness tuples must have n vectors");
        for (index, x) in tuple.iter().enumerate() {
            if !norm_val(x).at_least(0) {
                return Err(FredholmError::NotInUnitBall { index });
            }
        }
    }
    let idx = t.active_indices();
    let images: Vec<VectorC0> = idx.iter().map(|&j| apply(t, &VectorC0::basis(j))).collect();
    let extra: Vec<Vec<VectorC0>> = extra_witnesses.iter().map(|tuple| tuple.iter().map(|x| apply(t, x)).collect()).collect();
    let upper_bound = smallest_sum(images.iter().map(norm_val).collect(), n);

    let search = |cut: Option<i64>| {
        let prep = |x: &VectorC0| match cut {
            Some(w) => x.truncate(w),
            None => x.clone(),
        };
        let cols: Vec<VectorC0> = images.iter().map(prep).collect();
        let mut best = Valuation::Infinite;
        let mut witness = Vec::new();
        for combo in (0..idx.len()).combinations(n) {
            let vs: Vec<VectorC0> = combo.iter().map(|&k| cols[k].clone()).collect();
            let v = volume_or_unknown(&vs);
            if better(v, best) {
                best = v;
                witness = combo.iter().map(|&k| VectorC0::basis(idx[k])).collect();
            }
        }
        for (tuple, ys) in extra_witnesses.iter().zip(&extra) {
            let v = volume_or_unknown(&ys.iter().map(prep).collect::<Vec<_>>());
            if better(v, best) {
                best = v;
                witness = tuple.clone();
            }
        }
        (best, witness)
    };

    // Exact Gram–Schmidt is expensive; search at bounded precision first and
    // fall back to exact arithmetic only when no finite witness turns up.
    let work = upper_bound.lower_bound().unwrap_or(0).max(0) + DELTA_MARGIN;
    let (mut lower_bound, mut witness) = search(Some(work));
    if lower_bound.finite().is_none() {
        (lower_bound, witness) = search(None);
    }
    Ok(DeltaEstimate { n, lower_bound, witness, upper_bound })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrendPoint {
    pub n: usize,
    pub bound: Valuation,
    /// `v(Δₙ)/n`; `None` when `Δₙ = 0`.
    pub average: Option<Rational>,
}

pub fn delta_trend(t: &OperatorC0, n_max: usize) -> Result<Vec<TrendPoint>, FredholmError> {
    (1..=n_max)
        .map(|n| {
            let est = delta_n_estimate(t, n, &[])?;
            let average = est.lower_bound.finite().map(|v| Rational::new(v.into(), (n as i64).into()));
            Ok(TrendPoint { n, bound: est.lower_bound, average })
        })
        .collect()
}

/// Averages never decrease, and vanish (`Δₙ = 0`) once `n` exceeds the
/// number of active coordinates.
pub fn verify_delta_trend(t: &OperatorC0, trend: &[TrendPoint]) -> Verdict {
    const NAME: &str = "delta trend";
    let active = t.active_indices().len();
    let mut prev: Option<&Rational> = None;
    let mut vanished = false;
    for p in trend {
        match &p.average {
            Some(a) => {
                if vanished || prev.is_some_and(|q| a < q) {
                    return Verdict::fail(NAME, format!("average decreases at n = {}", p.n));
                }
                prev = Some(a);
            }
            None => vanished = true,
        }
        if p.n > active && !p.bound.is_infinite() {
            return Verdict::fail(NAME, format!("n = {} exceeds the rank but v = {}", p.n, p.bound));
        }
    }
    let seq: Vec<String> = trend.iter().map(|p| p.average.as_ref().map_or("inf".to_string(), |a| a.to_string())).collect();
    Verdict::pass(NAME, seq.join(", "))
}

/// Random vector with entries `c·t^{eps_val + j}` on `support`.
pub fn random_perturbation(support: &[usize], eps_val: i64, rng: &mut impl Rng) -> VectorC0 {
    let entries = support.iter().filter_map(|&i| {
        if !rng.gen_bool(0.7) {
            return None;
        }
        let c = [-3, -2, -1, 1, 2, 3][rng.gen_range(0..6usize)];
        let mut s = LaurentSeries::monomial(rat(c), eps_val + rng.gen_range(0..=2));
        if rng.gen_bool(0.3) {
            s = &s + &LaurentSeries::monomial(rat(rng.gen_range(1..=4)), eps_val + rng.gen_range(3..=5));
        }
        Some((i, s))
    });
    VectorC0::from_entries(entries.collect::<Vec<_>>())
}

/// Perturbs every `xᵢ` by vectors of valuation at least `eps_val` and
/// checks the volume is unchanged, over `trials` random draws.
pub fn vol_perturbation_check(xs: &[VectorC0], eps_val: i64, trials: usize, rng: &mut impl Rng) -> Result<Verdict, FredholmError> {
    const NAME: &str = "volume stability";
    for (index, x) in xs.iter().enumerate() {
        if !norm_val(x).at_least(0) {
            return Err(FredholmError::NotInUnitBall { index });
        }
    }
    let v = volume(xs)?;
    let Valuation::Finite(base) = v else { return Err(FredholmError::DegenerateFamily(v)) };
    if eps_val <= base {
        return Err(FredholmError::EpsilonTooLarge { eps_val, volume: base });
    }
    let mut support: Vec<usize> = xs.iter().flat_map(|x| x.support()).unique().sorted().collect();
    support.push(support.last().copied().unwrap_or(0) + 1);
    for trial in 0..trials {
        let ys: Vec<VectorC0> = xs.iter().map(|x| x.add(&random_perturbation(&support, eps_val, rng))).collect();
        let verdict = volume_preserved(xs, &ys)?;
        if !verdict.passed {
            return Ok(Verdict::fail(NAME, format!("trial {trial}: {}", verdict.detail)));
        }
    }
    Ok(Verdict::pass(NAME, format!("volume {v} unchanged over {trials} trials")))
}

/// `Vol(xs) = Vol(ys)`.
pub fn volume_preserved(xs: &[VectorC0], ys: &[VectorC0]) -> Result<Verdict, FredholmError> {
    let (v, w) = (volume(xs)?, volume(ys)?);
    Ok(Verdict::check("volume stability", v == w, format!("{v} vs {w}")))
}

/// Up to three vectors in the unit ball over at most four coordinates,
/// with finite volume.
pub fn gen_unit_family(rng: &mut impl Rng) -> Vec<VectorC0> {
    loop {
        let n = rng.gen_range(1..=3usize);
        let xs: Vec<VectorC0> = (0..n)
            .map(|_| {
                let entries = (1..=4usize).filter_map(|i| {
                    let c0 = rng.gen_range(-2..=2i64);
                    let s = &LaurentSeries::from_int(c0) + &LaurentSeries::monomial(rat(rng.gen_range(-2..=2)), rng.gen_range(1..=3));
                    (!s.is_zero_to_precision()).then_some((i, s))
                });
                VectorC0::from_entries(entries.collect::<Vec<_>>())
            })
            .collect();
        if matches!(volume(&xs), Ok(Valuation::Finite(_))) {
            return xs;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResolventMethod {
    Neumann,
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanSample {
    pub mu: LaurentSeries,
    pub method: ResolventMethod,
    /// `v(‖(I − μT)⁻¹‖)`.
    pub norm: Valuation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanReport {
    pub radius_val: i64,
    pub samples: Vec<ScanSample>,
    /// Valuation of the largest sampled norm.
    pub max_norm: Valuation,
}

impl ScanReport {
    pub fn bounded(&self) -> bool {
        self.samples.iter().all(|s| s.norm.finite().is_some())
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::check(
            "resolvent bounded",
            self.bounded(),
            format!("{} samples, max norm valuation {}", self.samples.len(), self.max_norm),
        )
    }
}

/// Resolvent norm at `μ` approaching `1/λ`; `norm` is `None` where `I − μT`
/// is singular.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlowUp {
    pub k: i64,
    pub mu: LaurentSeries,
    pub norm: Option<Valuation>,
}

const NEUMANN_TERMS: usize = 4;

/// `‖(I − μT)⁻¹‖` from `I + Σ μλₙ/(1 − μλₙ) · xₙxₙᵀ/⟨xₙ, xₙ⟩`.
pub fn spectral_resolvent_norm(dec: &SpectralDecomposition, mu: &LaurentSeries) -> Result<Valuation, FredholmError> {
    let mut k: std::collections::BTreeMap<(usize, usize), LaurentSeries> = Default::default();
    for (lambda, x) in dec.flat() {
        let ml = mu * &lambda;
        let denom = (&LaurentSeries::one() - &ml).inv().map_err(|e| FredholmError::Resolvent { mu: mu.clone(), reason: e.to_string() })?;
        let c = &(&ml * &denom) * &inner(&x, &x).inv().map_err(LinalgError::from)?;
        for (i, xi) in x.entries() {
            let cxi = &c * xi;
            for (j, xj) in x.entries() {
                let e = k.entry((i, j)).or_insert_with(LaurentSeries::zero);
                *e = &*e + &(&cxi * xj);
            }
        }
    }
    let mut acc = Valuation::Finite(0);
    for ((i, j), s) in k {
        let e = if i == j { &s + &LaurentSeries::one() } else { s };
        acc = acc.min_norm(e.valuation());
    }
    Ok(acc)
}

fn blow_up(dec: &SpectralDecomposition, lambda: &LaurentSeries) -> Vec<BlowUp> {
    let Ok(inv) = lambda.inv() else { return Vec::new() };
    let v = inv.valuation().lower_bound().unwrap_or(0);
    (1..=4)
        .map(|k| {
            let mu = inv.truncate(v + k).to_exact();
            let norm = spectral_resolvent_norm(dec, &mu).ok();
            BlowUp { k, mu, norm }
        })
        .collect()
}

/// Samples `‖(I − μT)⁻¹‖` at `μ = 0` and `μ = c·t^{v_r}`, `c·t^{v_r+1}` for
/// `c = 1..=grid`. Neumann series where `μT` is contractive, the spectral
/// closed form otherwise.
pub fn resolvent_bound_scan(t: &OperatorC0, v_r: i64, grid: i64, precision: i64) -> Result<ScanReport, FredholmError> {
    let contractive_everywhere = op_norm_val(t).lower_bound().is_none_or(|v| v + v_r > 0);
    let dec = if contractive_everywhere && !is_self_adjoint(t) {
        None
    } else {
        let dec = spectral_decompose(t, precision)?;
        for pair in dec.levels.values().flatten() {
            let v = pair.lambda.valuation().finite().expect("nonzero eigenvalue");
            if v <= -v_r {
                return Err(FredholmError::RadiusOutsideDT { lambda: pair.lambda.clone(), blow_up: blow_up(&dec, &pair.lambda) });
            }
        }
        Some(dec)
    };
    let mut mus = vec![LaurentSeries::zero()];
    for shell in [v_r, v_r + 1] {
        mus.extend((1..=grid).map(|c| LaurentSeries::monomial(rat(c), shell)));
    }
    let mut samples = Vec::with_capacity(mus.len());
    for mu in mus {
        let q = ResolventQuery { lambda: mu.clone(), terms: NEUMANN_TERMS };
        let sample = match neumann_resolvent(t, &q) {
            Ok(r) => ScanSample { norm: r.norm_val(), mu, method: ResolventMethod::Neumann },
            Err(_) => {
                let dec = dec.as_ref().ok_or(FredholmError::Spectral(SpectralError::NotSelfAdjoint))?;
                ScanSample { norm: spectral_resolvent_norm(dec, &mu)?, mu, method: ResolventMethod::Spectral }
            }
        };
        samples.push(sample);
    }
    let max_norm = samples.iter().map(|s| s.norm).fold(Valuation::Infinite, Valuation::min_norm);
    Ok(ScanReport { radius_val: v_r, samples, max_norm })
}

/// Random `f` with up to five coefficients in at most three coordinates.
pub fn gen_analytic_series(rng: &mut impl Rng) -> AnalyticSeries {
    let radius_val = rng.gen_range(-2..=2);
    let m = rng.gen_range(1..=5usize);
    let coefficients = (0..m)
        .map(|_| {
            let entries = (1..=3usize).filter_map(|i| {
                if !rng.gen_bool(0.6) {
                    return None;
                }
                let e = rng.gen_range(-2..=3);
                let mut s = LaurentSeries::monomial(rat([-2, -1, 1, 2, 3][rng.gen_range(0..5usize)]), e);
                if rng.gen_bool(0.4) {
                    s = &s + &LaurentSeries::monomial(rat(rng.gen_range(1..=3)), e + rng.gen_range(1..=3));
                }
                Some((i, s))
            });
            VectorC0::from_entries(entries.collect::<Vec<_>>())
        })
        .collect();
    AnalyticSeries { coefficients, radius_val }
}

/// Random point of the ball `v(λ) ≥ v_r`.
pub fn random_ball_point(v_r: i64, rng: &mut impl Rng) -> LaurentSeries {
    let terms = (0..rng.gen_range(1..=3)).map(|_| (v_r + rng.gen_range(0..=3), rat(rng.gen_range(-4..=4))));
    let mut s = LaurentSeries::zero();
    for (e, c) in terms {
        s = &s + &LaurentSeries::monomial(c, e);
    }
    s
}
