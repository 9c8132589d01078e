//! Property suites over generated corpora, grouped by tag, with an optional
//! fault-injection mode in which every check is fed a corrupted artifact
//! and is expected to reject it.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fredholm::{
    analytic_max_modulus, bound_holds, delta_trend, gen_analytic_series, gen_unit_family, random_ball_point, resolvent_bound_scan,
    verify_delta_trend, vol_perturbation_check, volume_preserved,
};
use crate::hahn::{diagonalize, gen_test_instance, verify, RationalRootOracle};
use crate::linalg::{gram_schmidt, inner, norm_val, normal_projection, volume, OrthoBasis, VectorC0};
use crate::operators::{compose, is_compactoid, is_compactoid_raw, op_norm_val, truncate, OperatorC0, RawMatrix};
use crate::scalars::{rat, FactorSet, LaurentSeries, Valuation};
use crate::spectral::{
    gen_self_adjoint_operator, random_probe, spectral_decompose, tail_projection_norms, verify_all_projections,
    verify_eigenspace_orthogonality, verify_eigs_tend_to_zero, verify_norm_max, verify_reconstruction, verify_square_norm_of,
    verify_tail_norms, EigenPair, SpectralDecomposition,
};
use crate::verdict::Verdict;

pub const TAGS: [&str; 13] = ["a2", "a4", "a5", "a6", "a7", "b2", "c1", "c2", "c3", "app1", "app4", "app5", "app7"];

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    pub precision: i64,
    pub grid: i64,
    /// Instances per tag.
    pub instances: usize,
    pub inject_faults: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 0, precision: 32, grid: 8, instances: 24, inject_faults: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TagResult {
    pub tag: String,
    /// Checks run (faults injected, in fault mode).
    pub total: usize,
    /// Checks that rejected their input.
    pub failed: usize,
    /// Instances where no meaningful check or fault applies.
    pub skipped: usize,
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SuiteSummary {
    pub inject_faults: bool,
    pub tags: Vec<TagResult>,
}

impl SuiteSummary {
    /// In normal mode: nothing failed. In fault mode: every fault was caught.
    pub fn success(&self) -> bool {
        if self.inject_faults {
            self.tags.iter().all(|t| t.failed == t.total)
        } else {
            self.tags.iter().all(|t| t.failed == 0)
        }
    }

    pub fn any_failure(&self) -> bool {
        self.tags.iter().any(|t| t.failed > 0)
    }
}

impl fmt::Display for SuiteSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tags {
            if self.inject_faults {
                write!(f, "{:<5} injected {:>3}  detected {:>3}  skipped {:>3}", t.tag, t.total, t.failed, t.skipped)?;
            } else {
                write!(f, "{:<5} pass {:>3}  fail {:>3}  skipped {:>3}", t.tag, t.total - t.failed, t.failed, t.skipped)?;
            }
            if let (false, Some(msg)) = (self.inject_faults, &t.first_failure) {
                write!(f, "  first failure: {msg}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

struct Recorder {
    results: BTreeMap<&'static str, TagResult>,
}

impl Recorder {
    fn entry(&mut self, tag: &'static str) -> &mut TagResult {
        self.results.entry(tag).or_insert_with(|| TagResult { tag: tag.to_string(), ..Default::default() })
    }

    fn record(&mut self, tag: &'static str, v: Verdict) {
        let e = self.entry(tag);
        e.total += 1;
        if !v.passed {
            e.failed += 1;
            if e.first_failure.is_none() {
                e.first_failure = Some(v.to_string());
            }
        }
    }

    fn skip(&mut self, tag: &'static str) {
        self.entry(tag).skipped += 1;
    }

    fn record_opt(&mut self, tag: &'static str, v: Option<Verdict>) {
        match v {
            Some(v) => self.record(tag, v),
            None => self.skip(tag),
        }
    }
}

/// `s + t^k`: changes the coefficient at `t^k`.
pub fn flip(s: &LaurentSeries, k: i64) -> LaurentSeries {
    s + &LaurentSeries::t_pow(k)
}

/// Adds `t^k` to entry `i` of a vector.
pub fn flip_entry(x: &VectorC0, i: usize, k: i64) -> VectorC0 {
    x.add(&VectorC0::from_entries([(i, LaurentSeries::t_pow(k))]))
}

fn first_unit_index(x: &VectorC0) -> Option<usize> {
    let v = norm_val(x).finite()?;
    x.entries().find(|(_, s)| s.valuation() == Valuation::Finite(v)).map(|(i, _)| i)
}

fn map_vectors(dec: &SpectralDecomposition, mut f: impl FnMut(usize, &VectorC0) -> VectorC0) -> SpectralDecomposition {
    let mut out = dec.clone();
    let mut k = 0;
    for pairs in out.levels.values_mut() {
        for p in pairs.iter_mut() {
            for v in p.vectors.iter_mut() {
                *v = f(k, v);
                k += 1;
            }
        }
    }
    out
}

/// Rebuilds the levels after changing the eigenvalue of the first pair.
fn refile_first(dec: &SpectralDecomposition, f: impl Fn(&LaurentSeries) -> LaurentSeries) -> SpectralDecomposition {
    let mut pairs: Vec<EigenPair> = dec.levels.values().flatten().cloned().collect();
    pairs[0].lambda = f(&pairs[0].lambda);
    let mut levels: BTreeMap<i64, Vec<EigenPair>> = BTreeMap::new();
    for p in pairs {
        if let Some(v) = p.lambda.valuation().finite() {
            levels.entry(v).or_default().push(p);
        }
    }
    SpectralDecomposition { precision: dec.precision, levels, kernel: dec.kernel.clone() }
}

/// Corrupted eigenvector family for the orthogonality check: one
/// coefficient at `t¹` of `x₀`, placed where another eigenvector is a unit.
pub fn corrupt_orthogonality(dec: &SpectralDecomposition) -> Option<SpectralDecomposition> {
    let flat = dec.flat();
    let other = flat.get(1).map(|(_, v)| v.clone()).or_else(|| dec.kernel.first().cloned())?;
    if flat.is_empty() || dec.precision < 2 {
        return None;
    }
    let i = first_unit_index(&other)?;
    Some(map_vectors(dec, |k, v| if k == 0 { flip_entry(v, i, 1) } else { v.clone() }))
}

/// Corrupted invariant subspace: the first eigenvector picks up `t¹` at a
/// coordinate where an eigenvector of a different eigenvalue is a unit.
pub fn corrupt_eigenspace(dec: &SpectralDecomposition) -> Option<SpectralDecomposition> {
    let pairs: Vec<&EigenPair> = dec.levels.values().flatten().collect();
    let first = pairs.first()?;
    let other = pairs.get(1).map(|p| p.vectors[0].clone()).or_else(|| dec.kernel.first().cloned())?;
    if dec.precision < 2 || first.vectors.is_empty() {
        return None;
    }
    let i = first_unit_index(&other)?;
    Some(map_vectors(dec, |k, v| if k == 0 { flip_entry(v, i, 1) } else { v.clone() }))
}

/// The leading eigenvalue with a coefficient changed just above its valuation.
pub fn corrupt_eigenvalue(dec: &SpectralDecomposition) -> Option<SpectralDecomposition> {
    let (&v, _) = dec.levels.iter().next()?;
    if v + 1 >= dec.precision {
        return None;
    }
    Some(refile_first(dec, |l| flip(l, v + 1)))
}

/// The leading eigenvalue moved to a larger magnitude.
pub fn corrupt_magnitude(dec: &SpectralDecomposition) -> Option<SpectralDecomposition> {
    let (&v, _) = dec.levels.iter().next()?;
    Some(refile_first(dec, |l| flip(l, v - 1)))
}

fn truncation_verdict(t: &OperatorC0, truncs: &[OperatorC0]) -> Verdict {
    const NAME: &str = "truncation converges";
    let vals: Vec<Valuation> = truncs.iter().map(|tn| op_norm_val(&t.sub(tn))).collect();
    for w in vals.windows(2) {
        if let (Some(a), Some(b)) = (w[0].finite(), w[1].lower_bound()) {
            if b < a {
                return Verdict::fail(NAME, format!("{vals:?} decreases"));
            }
        }
        if w[0].is_infinite() && !w[1].is_infinite() {
            return Verdict::fail(NAME, format!("{vals:?} reappears"));
        }
    }
    let last = vals.last().copied().unwrap_or(Valuation::Infinite);
    Verdict::check(NAME, last.is_infinite(), format!("last value {last}"))
}

fn projection_verdict(basis: &OrthoBasis, probes: &[VectorC0]) -> Verdict {
    const NAME: &str = "normal projection";
    let p = |x: &VectorC0| normal_projection(basis, x).expect("basis self products are invertible");
    for (k, x) in basis.vectors.iter().enumerate() {
        if !p(x).sub(x).is_zero_to_precision() {
            return Verdict::fail(NAME, format!("P fixes basis vector {k} only up to {}", p(x).sub(x)));
        }
    }
    for (k, y) in probes.iter().enumerate() {
        let py = p(y);
        if !p(&py).sub(&py).is_zero_to_precision() {
            return Verdict::fail(NAME, format!("P^2 != P on probe {k}"));
        }
        for z in probes {
            if !(&inner(&py, z) - &inner(y, &p(z))).is_zero_to_precision() {
                return Verdict::fail(NAME, format!("P is not symmetric on probe {k}"));
            }
        }
    }
    Verdict::pass(NAME, format!("{} basis vectors, {} probes", basis.len(), probes.len()))
}

fn random_vector(rng: &mut impl Rng, dim: usize) -> VectorC0 {
    let entries = (1..=dim).filter_map(|i| {
        let s = &LaurentSeries::from_int(rng.gen_range(-2..=2)) + &LaurentSeries::monomial(rat(rng.gen_range(-2..=2)), rng.gen_range(1..=2));
        (!s.is_zero_to_precision()).then_some((i, s))
    });
    VectorC0::from_entries(entries.collect::<Vec<_>>())
}

fn both(a: Verdict, b: Verdict) -> Verdict {
    if a.passed {
        b
    } else {
        a
    }
}

pub fn run_suite(cfg: &SuiteConfig) -> SuiteSummary {
    let mut rec = Recorder { results: BTreeMap::new() };
    let inject = cfg.inject_faults;
    let n = cfg.precision;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let base = cfg.seed.wrapping_mul(1_000_003);

    // Diagonalization of generated symmetric matrices.
    for k in 0..cfg.instances {
        let size = 1 + k % 6;
        let inst = gen_test_instance(size, base.wrapping_add(k as u64), k % 5);
        let c = if k % 3 == 2 { FactorSet::exponential(rat(2)) } else { FactorSet::trivial() };
        let v = match diagonalize(&inst.matrix, n, &c, &RationalRootOracle) {
            Ok(mut r) => {
                if inject {
                    let e = &mut r.u.entries_mut()[k % size][0];
                    *e = flip(e, 1 + (k as i64) % (n - 1));
                }
                let rep = verify(&r, &inst.matrix, n);
                Verdict::check("diagonalization", rep.passed(), format!("{:?}", rep.failures))
            }
            Err(e) => Verdict::fail("diagonalization", e.to_string()),
        };
        rec.record("b2", v);
    }

    // Spectral properties of generated self-adjoint operators.
    for k in 0..cfg.instances {
        let t = gen_self_adjoint_operator(base.wrapping_add(10_000 + k as u64));
        let dec = match spectral_decompose(&t, n) {
            Ok(d) => d,
            Err(e) => {
                for tag in ["a4", "a5", "a6", "a7"] {
                    rec.record(tag, Verdict::fail("spectral decomposition", e.to_string()));
                }
                continue;
            }
        };
        let square = compose(&t, &t);
        let a2 = if inject {
            op_norm_val(&t).finite().map(|v| {
                let bad = square.add(&OperatorC0::diagonal(&[LaurentSeries::t_pow(2 * v - 1)]));
                verify_square_norm_of(&t, &bad)
            })
        } else {
            Some(verify_square_norm_of(&t, &square))
        };
        rec.record_opt("a2", a2);

        let a4 = if inject { corrupt_eigenspace(&dec).map(|d| verify_all_projections(&t, &d)) } else { Some(verify_all_projections(&t, &dec)) };
        rec.record_opt("a4", a4);

        let a5 = if inject { corrupt_orthogonality(&dec).map(|d| verify_eigenspace_orthogonality(&d)) } else { Some(verify_eigenspace_orthogonality(&dec)) };
        rec.record_opt("a5", a5);

        let probes: Vec<VectorC0> = (0..10).map(|_| random_probe(&t, &mut rng)).collect();
        let a6 = if inject {
            corrupt_eigenvalue(&dec).map(|d| verify_reconstruction(&t, &d, &probes))
        } else {
            Some(verify_reconstruction(&t, &dec, &probes))
        };
        rec.record_opt("a6", a6);

        let a7 = |d: &SpectralDecomposition| {
            let tails = match tail_projection_norms(&t, d) {
                Ok(x) => verify_tail_norms(&x),
                Err(e) => Verdict::fail("tail projection norms", e.to_string()),
            };
            both(both(verify_norm_max(&t, d), verify_eigs_tend_to_zero(d)), tails)
        };
        let a7v = if inject { corrupt_magnitude(&dec).map(|d| a7(&d)) } else { Some(a7(&dec)) };
        rec.record_opt("a7", a7v);

        let c2 = if t.max_index() == 0 {
            None
        } else {
            let mut truncs: Vec<OperatorC0> = (1..=t.max_index() + 1).map(|m| truncate(&t, m)).collect();
            if inject {
                let last = truncs.last_mut().unwrap();
                *last = last.add(&OperatorC0::diagonal(&[LaurentSeries::t_pow(1)]));
            }
            Some(truncation_verdict(&t, &truncs))
        };
        rec.record_opt("c2", c2);

        let c1 = {
            let rows = 10 + k % 20;
            let mut raw = RawMatrix::from_fn(rows, |i| {
                BTreeMap::from([(i, LaurentSeries::monomial(rat(1 + (i % 3) as i64), i as i64)), (i + 1, LaurentSeries::t_pow(i as i64 + 1))])
            });
            let constant = RawMatrix::from_fn(rows, |i| BTreeMap::from([(i, LaurentSeries::one())]));
            if inject {
                let last = raw.rows.last_mut().unwrap();
                let (j, s) = last.iter().next().map(|(j, s)| (*j, s.clone())).unwrap();
                last.insert(j, flip(&s, 0));
            }
            let ok = is_compactoid(&t) && is_compactoid_raw(&raw) && !is_compactoid_raw(&constant);
            Verdict::check("compactoid criterion", ok, format!("{rows} rows"))
        };
        rec.record("c1", c1);

        let app7 = {
            let vmin = dec.levels.keys().next().copied().unwrap_or(0);
            let v_r = 1 - vmin + (k as i64 % 2);
            let target = if inject { t.add(&OperatorC0::diagonal(&[LaurentSeries::t_pow(-v_r)])) } else { t.clone() };
            match resolvent_bound_scan(&target, v_r, cfg.grid, n) {
                Ok(r) => r.verdict(),
                Err(e) => Verdict::fail("resolvent bounded", e.to_string()),
            }
        };
        rec.record("app7", app7);

        if !inject {
            let m = t.active_indices().len().min(3) + 1;
            let v = match delta_trend(&t, m) {
                Ok(tr) => verify_delta_trend(&t, &tr),
                Err(e) => Verdict::fail("delta trend", e.to_string()),
            };
            rec.record("app5", v);
        }
    }

    // Normal projections from Gram–Schmidt.
    for k in 0..cfg.instances {
        let dim = 2 + k % 4;
        let vs: Vec<VectorC0> = (0..1 + k % dim).map(|_| random_vector(&mut rng, dim)).collect();
        let Ok(mut basis) = gram_schmidt(&vs) else {
            rec.skip("c3");
            continue;
        };
        if inject {
            let s = &basis.self_inner[0];
            let v = s.valuation().finite().unwrap();
            basis.self_inner[0] = flip(s, v + 1);
        }
        let probes: Vec<VectorC0> = (0..3).map(|_| random_vector(&mut rng, dim)).collect();
        rec.record("c3", projection_verdict(&basis, &probes));
    }

    // Max-modulus bound for analytic functions.
    for _ in 0..cfg.instances {
        let f = gen_analytic_series(&mut rng);
        let samples: Vec<LaurentSeries> = (0..5).map(|_| random_ball_point(f.radius_val, &mut rng)).collect();
        let rep = analytic_max_modulus(&f, &samples, cfg.grid).expect("samples lie in the ball");
        if inject {
            let Some(r) = rep.rhs.finite() else {
                rec.skip("app1");
                continue;
            };
            let mut bad = f.clone();
            bad.coefficients[0] = flip_entry(&bad.coefficients[0], 1, r - 1);
            let values: Vec<Valuation> = samples.iter().map(|s| norm_val(&bad.eval(s))).collect();
            rec.record("app1", Verdict::check("max modulus", bound_holds(rep.rhs, &values), "corrupted values"));
        } else {
            rec.record("app1", rep.verdict());
        }
    }

    // Volume stability under small perturbations.
    for _ in 0..cfg.instances {
        let xs = gen_unit_family(&mut rng);
        let v = volume(&xs).ok().and_then(|v| v.finite()).expect("family has finite volume");
        let verdict = if inject {
            let fresh = xs.iter().map(|x| x.max_index()).max().unwrap_or(0) + 1;
            let mut ys = xs.clone();
            ys[0] = flip_entry(&ys[0], fresh, -1);
            volume_preserved(&xs, &ys)
        } else {
            vol_perturbation_check(&xs, v + rng.gen_range(1..=3), 10, &mut rng)
        };
        rec.record("app4", verdict.unwrap_or_else(|e| Verdict::fail("volume stability", e.to_string())));
    }

    let tags = TAGS.iter().filter_map(|t| rec.results.remove(t)).collect();
    SuiteSummary { inject_faults: inject, tags }
}
