//! Operators on c₀: a finite block plus a diagonal tail with strictly
//! increasing valuations. Every such operator is compactoid.

use std::collections::{BTreeMap, BTreeSet};

use crate::linalg::VectorC0;
use crate::scalars::{min_opt, LaurentSeries, Rational, Valuation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OperatorError {
    #[error("block must be square")]
    NotSquare,
    #[error("invalid tail: {0}")]
    InvalidTail(String),
    #[error("not contractive: v(lambda) + v(T) = {0} is not positive")]
    NotContractive(String),
    #[error("operator is not self-adjoint")]
    NotSelfAdjoint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorC0 {
    block: Vec<Vec<LaurentSeries>>,
    tail: Vec<(usize, LaurentSeries)>,
}

impl OperatorC0 {
    /// Validates the tail and brings the block to a common precision.
    pub fn new(block: Vec<Vec<LaurentSeries>>, tail: Vec<(usize, LaurentSeries)>) -> Result<Self, OperatorError> {
        let d = block.len();
        if block.iter().any(|r| r.len() != d) {
            return Err(OperatorError::NotSquare);
        }
        let mut prev: Option<(usize, i64)> = None;
        for (i, s) in &tail {
            let v = s.valuation().finite().ok_or_else(|| {
                OperatorError::InvalidTail(format!("entry at {i} is not known to be nonzero"))
            })?;
            if *i <= d {
                return Err(OperatorError::InvalidTail(format!("index {i} lies inside the block")));
            }
            if let Some((pi, pv)) = prev {
                if *i <= pi || v <= pv {
                    return Err(OperatorError::InvalidTail(format!(
                        "indices and valuations must increase strictly (at index {i})"
                    )));
                }
            }
            prev = Some((*i, v));
        }
        let prec = block.iter().flatten().fold(None, |p, s| min_opt(p, s.precision()));
        let block = match prec {
            None => block,
            Some(p) => block.into_iter().map(|r| r.into_iter().map(|s| s.truncate(p)).collect()).collect(),
        };
        Ok(OperatorC0 { block, tail })
    }

    pub fn from_block(block: Vec<Vec<LaurentSeries>>) -> Result<Self, OperatorError> {
        Self::new(block, Vec::new())
    }

    /// Diagonal block operator.
    pub fn diagonal(entries: &[LaurentSeries]) -> Self {
        let d = entries.len();
        let block = (0..d)
            .map(|i| (0..d).map(|j| if i == j { entries[i].clone() } else { LaurentSeries::zero() }).collect())
            .collect();
        Self::new(block, Vec::new()).expect("diagonal block is valid")
    }

    pub fn zero() -> Self {
        OperatorC0 { block: Vec::new(), tail: Vec::new() }
    }

    /// `d×d` identity block (finite rank).
    pub fn identity_block(d: usize) -> Self {
        Self::diagonal(&vec![LaurentSeries::one(); d])
    }

    pub fn dim(&self) -> usize {
        self.block.len()
    }

    pub fn block(&self) -> &[Vec<LaurentSeries>] {
        &self.block
    }

    pub fn tail(&self) -> &[(usize, LaurentSeries)] {
        &self.tail
    }

    pub fn block_precision(&self) -> Option<i64> {
        self.block.iter().flatten().fold(None, |p, s| min_opt(p, s.precision()))
    }

    /// Entry `a_{ij}` (1-based).
    pub fn entry(&self, i: usize, j: usize) -> LaurentSeries {
        let d = self.dim();
        if i <= d && j <= d {
            return self.block[i - 1][j - 1].clone();
        }
        if i == j {
            if let Some((_, s)) = self.tail.iter().find(|(k, _)| *k == i) {
                return s.clone();
            }
        }
        LaurentSeries::zero()
    }

    /// Block indices followed by tail indices.
    pub fn active_indices(&self) -> Vec<usize> {
        (1..=self.dim()).chain(self.tail.iter().map(|(i, _)| *i)).collect()
    }

    pub fn max_index(&self) -> usize {
        self.tail.last().map_or(self.dim(), |(i, _)| *i)
    }

    fn entries(&self) -> impl Iterator<Item = &LaurentSeries> + '_ {
        self.block.iter().flatten().chain(self.tail.iter().map(|(_, s)| s))
    }

    /// Builds an operator from an arbitrary dense block of size `m` (covering
    /// indices 1..=m) and diagonal candidates beyond it, folding tail entries
    /// into the block until the remaining tail is admissible.
    fn assemble(mut block: Vec<Vec<LaurentSeries>>, candidates: BTreeMap<usize, LaurentSeries>) -> Self {
        let cands: Vec<(usize, LaurentSeries)> = candidates.into_iter().filter(|(_, s)| !s.is_zero_to_precision()).collect();
        // Longest suffix with strictly increasing valuations.
        let mut keep_from = cands.len();
        let mut next_v: Option<i64> = None;
        for k in (0..cands.len()).rev() {
            let v = cands[k].1.valuation().finite().unwrap();
            if next_v.is_none_or(|nv| v < nv) {
                keep_from = k;
                next_v = Some(v);
            } else {
                break;
            }
        }
        let m = block.len();
        let new_m = if keep_from == 0 { m } else { cands[keep_from - 1].0.max(m) };
        if new_m > m {
            for row in block.iter_mut() {
                row.resize(new_m, LaurentSeries::zero());
            }
            block.resize_with(new_m, || vec![LaurentSeries::zero(); new_m]);
            for (i, s) in &cands[..keep_from] {
                block[i - 1][i - 1] = s.clone();
            }
        }
        let tail = cands[keep_from..].to_vec();
        // Drop trailing all-zero block rows/columns so zero operators stay small.
        let mut size = block.len();
        while size > 0
            && (0..size).all(|k| block[size - 1][k].is_zero_to_precision() && block[k][size - 1].is_zero_to_precision())
            && block[size - 1].iter().chain(block.iter().map(|r| &r[size - 1])).all(|s| s.is_exact())
        {
            size -= 1;
        }
        block.truncate(size);
        for row in block.iter_mut() {
            row.truncate(size);
        }
        OperatorC0::new(block, tail).expect("assembled operator is valid")
    }

    // Dense block of size `m ≥ dim`, with tail entries at indices ≤ m folded in.
    fn expanded_block(&self, m: usize) -> Vec<Vec<LaurentSeries>> {
        (1..=m).map(|i| (1..=m).map(|j| self.entry(i, j)).collect()).collect()
    }

    fn tail_beyond(&self, m: usize) -> BTreeMap<usize, LaurentSeries> {
        self.tail.iter().filter(|(i, _)| *i > m).cloned().collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &Self, f: impl Fn(&LaurentSeries, &LaurentSeries) -> LaurentSeries) -> Self {
        let m = self.dim().max(other.dim());
        let (a, b) = (self.expanded_block(m), other.expanded_block(m));
        let block = (0..m).map(|i| (0..m).map(|j| f(&a[i][j], &b[i][j])).collect()).collect();
        let (ta, tb) = (self.tail_beyond(m), other.tail_beyond(m));
        let idx: BTreeSet<usize> = ta.keys().chain(tb.keys()).copied().collect();
        let zero = LaurentSeries::zero();
        let cands = idx
            .into_iter()
            .map(|i| (i, f(ta.get(&i).unwrap_or(&zero), tb.get(&i).unwrap_or(&zero))))
            .collect();
        Self::assemble(block, cands)
    }

    pub fn scale(&self, lambda: &LaurentSeries) -> Self {
        let block = self.block.iter().map(|r| r.iter().map(|s| s * lambda).collect()).collect();
        let cands = self.tail.iter().map(|(i, s)| (*i, s * lambda)).collect();
        Self::assemble(block, cands)
    }

    /// Rows of the operator restricted to the active coordinates.
    pub fn to_active_matrix(&self) -> (Vec<usize>, Vec<Vec<LaurentSeries>>) {
        let idx = self.active_indices();
        let m = idx.iter().map(|&i| idx.iter().map(|&j| self.entry(i, j)).collect()).collect();
        (idx, m)
    }
}

/// Recomputes `lim sup_j |a_ij| = 0` from the entries.
pub fn is_compactoid(t: &OperatorC0) -> bool {
    let sups: Vec<Valuation> = t.tail.iter().map(|(_, s)| s.valuation()).collect();
    tail_decays(&sups)
}

/// A finite window of rows of a possibly non-compactoid matrix.
#[derive(Clone, Debug, Default)]
pub struct RawMatrix {
    pub rows: Vec<BTreeMap<usize, LaurentSeries>>,
}

impl RawMatrix {
    pub fn from_fn(rows: usize, f: impl Fn(usize) -> BTreeMap<usize, LaurentSeries>) -> Self {
        RawMatrix { rows: (1..=rows).map(f).collect() }
    }
}

/// Window surrogate of the row criterion: over the second half of the
/// window the row suprema must shrink strictly (or vanish).
pub fn is_compactoid_raw(m: &RawMatrix) -> bool {
    let sups: Vec<Valuation> = m
        .rows
        .iter()
        .map(|r| r.values().fold(Valuation::Infinite, |acc, s| acc.min_norm(s.valuation())))
        .collect();
    let half = sups.len() / 2;
    tail_decays(&sups[half..])
}

fn tail_decays(sups: &[Valuation]) -> bool {
    let mut prev: Option<i64> = None;
    let mut vanished = false;
    for v in sups {
        match v {
            Valuation::Infinite => vanished = true,
            Valuation::Finite(x) => {
                if vanished || prev.is_some_and(|p| *x <= p) {
                    return false;
                }
                prev = Some(*x);
            }
            Valuation::Unknown(_) => return false,
        }
    }
    true
}

/// Transpose of the block; the tail is unchanged.
pub fn adjoint(t: &OperatorC0) -> OperatorC0 {
    let d = t.dim();
    let block = (0..d).map(|i| (0..d).map(|j| t.block[j][i].clone()).collect()).collect();
    OperatorC0 { block, tail: t.tail.clone() }
}

pub fn is_self_adjoint(t: &OperatorC0) -> bool {
    let d = t.dim();
    (0..d).all(|i| (i + 1..d).all(|j| (&t.block[i][j] - &t.block[j][i]).is_zero_to_precision()))
}

/// `‖T‖ = sup |a_ij|`, as a valuation.
pub fn op_norm_val(t: &OperatorC0) -> Valuation {
    t.entries().fold(Valuation::Infinite, |acc, s| acc.min_norm(s.valuation()))
}

pub fn apply(t: &OperatorC0, x: &VectorC0) -> VectorC0 {
    let d = t.dim();
    let xs: Vec<LaurentSeries> = (1..=d).map(|j| x.get(j)).collect();
    let mut out = Vec::new();
    for i in 0..d {
        let mut acc = LaurentSeries::zero();
        for j in 0..d {
            acc = &acc + &(&t.block[i][j] * &xs[j]);
        }
        out.push((i + 1, acc));
    }
    for (i, s) in &t.tail {
        out.push((*i, s * &x.get(*i)));
    }
    VectorC0::from_entries(out)
}

/// Operator product `S∘T`.
pub fn compose(s: &OperatorC0, t: &OperatorC0) -> OperatorC0 {
    let m = s.dim().max(t.dim());
    let (a, b) = (s.expanded_block(m), t.expanded_block(m));
    let mut block = vec![vec![LaurentSeries::zero(); m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut acc = LaurentSeries::zero();
            for k in 0..m {
                if a[i][k].is_exact() && a[i][k].is_zero_to_precision() {
                    continue;
                }
                acc = &acc + &(&a[i][k] * &b[k][j]);
            }
            block[i][j] = acc;
        }
    }
    let tb = t.tail_beyond(m);
    let cands = s
        .tail_beyond(m)
        .into_iter()
        .filter_map(|(i, x)| tb.get(&i).map(|y| (i, &x * y)))
        .collect();
    OperatorC0::assemble(block, cands)
}

pub fn power(t: &OperatorC0, n: u32) -> OperatorC0 {
    assert!(n >= 1);
    let mut acc = t.clone();
    for _ in 1..n {
        acc = compose(&acc, t);
    }
    acc
}

/// `valuation(Tⁿ)/n`, as an exact ratio.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormRate {
    Finite(Rational),
    Infinite,
    /// `Tⁿ` vanished to precision; the ratio is only bounded below.
    AtLeast(Rational),
}

pub fn power_norm_seq(t: &OperatorC0, n_max: u32) -> Vec<NormRate> {
    let mut out = Vec::new();
    let mut p = t.clone();
    for n in 1..=n_max {
        if n > 1 {
            p = compose(&p, t);
        }
        let r = |v: i64| Rational::new(v.into(), (n as i64).into());
        out.push(match op_norm_val(&p) {
            Valuation::Finite(v) => NormRate::Finite(r(v)),
            Valuation::Infinite => NormRate::Infinite,
            Valuation::Unknown(v) => NormRate::AtLeast(r(v)),
        });
    }
    out
}

/// Top-left `n×n` corner `Tₙ`.
pub fn truncate(t: &OperatorC0, n: usize) -> OperatorC0 {
    assert!(n >= 1);
    if n >= t.max_index() {
        return t.clone();
    }
    let d = t.dim();
    if n <= d {
        let block = t.block[..n].iter().map(|r| r[..n].to_vec()).collect();
        return OperatorC0 { block, tail: Vec::new() };
    }
    OperatorC0 { block: t.block.clone(), tail: t.tail.iter().filter(|(i, _)| *i <= n).cloned().collect() }
}

#[derive(Clone, Debug)]
pub struct ResolventQuery {
    pub lambda: LaurentSeries,
    pub terms: usize,
}

/// An operator of the form `I + K` with `K` compactoid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityPlus {
    pub k: OperatorC0,
}

impl IdentityPlus {
    pub fn apply(&self, x: &VectorC0) -> VectorC0 {
        x.add(&apply(&self.k, x))
    }

    /// `‖I + K‖`; coordinates outside the active set contribute `|1|`.
    pub fn norm_val(&self) -> Valuation {
        let (idx, m) = self.k.to_active_matrix();
        let mut acc = Valuation::Finite(0);
        for (a, row) in m.iter().enumerate() {
            for (b, s) in row.iter().enumerate() {
                let e = if idx[a] == idx[b] { s + &LaurentSeries::one() } else { s.clone() };
                acc = acc.min_norm(e.valuation());
            }
        }
        acc
    }
}

/// Partial Neumann sum `Σ_{n<terms} (λT)ⁿ`.
pub fn neumann_resolvent(t: &OperatorC0, q: &ResolventQuery) -> Result<IdentityPlus, OperatorError> {
    assert!(q.terms >= 1);
    let rate = contraction_rate(t, &q.lambda);
    if !rate.is_none_or(|r| r > 0) {
        return Err(OperatorError::NotContractive(format!("{}", rate.unwrap())));
    }
    let lt = t.scale(&q.lambda);
    let mut k = OperatorC0::zero();
    let mut p: Option<OperatorC0> = None;
    for _ in 1..q.terms {
        let next = match &p {
            None => lt.clone(),
            Some(x) => compose(x, &lt),
        };
        k = k.add(&next);
        p = Some(next);
    }
    Ok(IdentityPlus { k })
}

/// Lower bound on `v(λ) + v(T)`; `None` when one factor is exactly zero.
pub fn contraction_rate(t: &OperatorC0, lambda: &LaurentSeries) -> Option<i64> {
    Some(lambda.valuation().lower_bound()? + op_norm_val(t).lower_bound()?)
}

/// `(I − λT)(I + K) − I = K − λT − λTK`.
pub fn resolvent_residual(t: &OperatorC0, lambda: &LaurentSeries, r: &IdentityPlus) -> OperatorC0 {
    let lt = t.scale(lambda);
    r.k.sub(&lt).sub(&compose(&lt, &r.k))
}

/// Eigenvalues with multiplicities, sorted by increasing valuation.
#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<(LaurentSeries, usize)>,
    pub source: Vec<EigenSource>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenSource {
    Block,
    Tail(usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn s(x: &str) -> LaurentSeries {
        x.parse().unwrap()
    }

    fn op(rows: &[&[&str]]) -> OperatorC0 {
        OperatorC0::from_block(rows.iter().map(|r| r.iter().map(|x| s(x)).collect()).collect()).unwrap()
    }

    fn tailed(d: usize, k: usize) -> OperatorC0 {
        let block = vec![vec![LaurentSeries::zero(); d]; d];
        OperatorC0::new(block, (1..=k).map(|j| (d + j, LaurentSeries::t_pow(j as i64))).collect()).unwrap()
    }

    #[test]
    fn tail_validation() {
        let bad = OperatorC0::new(vec![], vec![(1, s("t")), (2, s("t"))]);
        assert!(matches!(bad, Err(OperatorError::InvalidTail(_))));
        let inside = OperatorC0::new(vec![vec![s("1")]], vec![(1, s("t"))]);
        assert!(inside.is_err());
        assert!(OperatorC0::new(vec![vec![s("1"), s("2")]], vec![]).is_err());
    }

    #[test]
    fn compactoid_examples() {
        assert!(is_compactoid(&op(&[&["1", "t"], &["t", "2"]])));
        assert!(is_compactoid(&tailed(2, 6)));
        let constant = RawMatrix::from_fn(40, |i| BTreeMap::from([(i, LaurentSeries::one())]));
        assert!(!is_compactoid_raw(&constant));
        let decaying = RawMatrix::from_fn(40, |i| BTreeMap::from([(i, LaurentSeries::t_pow(i as i64))]));
        assert!(is_compactoid_raw(&decaying));
    }

    #[test]
    fn adjoint_examples() {
        let n = op(&[&["0", "1"], &["0", "0"]]);
        assert_eq!(adjoint(&n), op(&[&["0", "0"], &["1", "0"]]));
        let sym = op(&[&["1", "t"], &["t", "2"]]);
        assert_eq!(adjoint(&sym), sym);
        assert_eq!(adjoint(&tailed(1, 3)).tail(), tailed(1, 3).tail());
        assert!(is_self_adjoint(&sym));
        assert!(!is_self_adjoint(&n));
        assert!(is_self_adjoint(&tailed(0, 3)));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(op_norm_val(&OperatorC0::diagonal(&[s("t"), s("t^2")])), Valuation::Finite(1));
        assert_eq!(op_norm_val(&OperatorC0::zero()), Valuation::Infinite);
        assert_eq!(op_norm_val(&op(&[&["1", "t"], &["t", "2"]])), Valuation::Finite(0));
    }

    #[test]
    fn apply_examples() {
        let t = OperatorC0::diagonal(&[s("t"), s("t^2")]);
        let x: VectorC0 = "{1: 1, 2: 1}".parse().unwrap();
        assert_eq!(apply(&t, &x), "{1: t, 2: t^2}".parse().unwrap());
        let x: VectorC0 = "{1: 3, 2: t}".parse().unwrap();
        assert_eq!(apply(&OperatorC0::identity_block(2), &x), x);
        let e = VectorC0::basis(4);
        assert_eq!(apply(&tailed(2, 3), &e), "{4: t^2}".parse().unwrap());
    }

    #[test]
    fn compose_examples() {
        let t = op(&[&["1", "t"], &["t", "2"]]);
        assert_eq!(compose(&t, &OperatorC0::identity_block(2)), t);
        let a = tailed(1, 4);
        let b = OperatorC0::new(vec![vec![s("1")]], vec![(3, s("1 + t")), (4, s("t^5"))]).unwrap();
        let p = compose(&a, &b);
        assert_eq!(p.entry(3, 3), s("t^2 + t^3"));
        assert_eq!(p.entry(4, 4), s("t^8"));
        assert_eq!(p.entry(2, 2), LaurentSeries::zero());
        let n = op(&[&["0", "1"], &["0", "0"]]);
        assert_eq!(op_norm_val(&compose(&n, &n)), Valuation::Infinite);
    }

    #[test]
    fn power_norm_examples() {
        let one = NormRate::Finite(Rational::from_integer(1.into()));
        assert_eq!(power_norm_seq(&OperatorC0::diagonal(&[s("t"), s("t^2")]), 4), vec![one.clone(); 4]);
        let n = op(&[&["0", "1"], &["0", "0"]]);
        let seq = power_norm_seq(&n, 3);
        assert_eq!(seq[0], NormRate::Finite(Rational::zero()));
        assert_eq!(seq[1], NormRate::Infinite);
        let t = op(&[&["t", "t^2"], &["t^2", "t"]]);
        assert_eq!(power_norm_seq(&t, 4), vec![one; 4]);
    }

    #[test]
    fn neumann_examples() {
        let t = OperatorC0::diagonal(&[s("t")]);
        let r = neumann_resolvent(&t, &ResolventQuery { lambda: LaurentSeries::one(), terms: 4 }).unwrap();
        assert_eq!(r.k.entry(1, 1), s("t + t^2 + t^3"));
        let res = resolvent_residual(&t, &LaurentSeries::one(), &r);
        assert_eq!(op_norm_val(&res), Valuation::Finite(4));
        let r0 = neumann_resolvent(&t, &ResolventQuery { lambda: LaurentSeries::zero(), terms: 3 }).unwrap();
        assert_eq!(op_norm_val(&r0.k), Valuation::Infinite);
        assert_eq!(r0.norm_val(), Valuation::Finite(0));
        let u = OperatorC0::diagonal(&[s("1 + t")]);
        let e = neumann_resolvent(&u, &ResolventQuery { lambda: LaurentSeries::one(), terms: 3 });
        assert!(matches!(e, Err(OperatorError::NotContractive(_))));
    }

    #[test]
    fn truncate_examples() {
        let t = tailed(2, 3);
        assert_eq!(truncate(&t, 9), t);
        let sym = op(&[&["t", "t^2"], &["t^2", "t"]]);
        assert_eq!(truncate(&sym, 1), op(&[&["t"]]));
        assert_eq!(truncate(&OperatorC0::zero(), 3), OperatorC0::zero());
        assert_eq!(truncate(&t, 4).tail().len(), 2);
    }

    #[test]
    fn sums_keep_tail_admissible() {
        let a = OperatorC0::new(vec![], vec![(3, s("t"))]).unwrap();
        let b = OperatorC0::new(vec![], vec![(4, s("1"))]).unwrap();
        let c = a.add(&b);
        assert!(is_compactoid(&c));
        assert_eq!(c.entry(3, 3), s("t"));
        assert_eq!(c.entry(4, 4), s("1"));
        assert_eq!(c.entry(1, 2), LaurentSeries::zero());
    }
}
