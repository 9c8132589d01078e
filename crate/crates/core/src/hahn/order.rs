//! The order-by-order construction of `U = Σ U_δ t^δ` for one block split.

use num_traits::{One, Zero};

use super::qmat::QMat;
use super::ratmat::RatMatrix;
use super::DiagError;
use crate::scalars::{ratio, FactorSet, Rational};

/// State of the order loop for a series `b = Σ b_δ t^δ` whose leading
/// coefficient is `b_0 = G·diag(d)`, with coordinates grouped by `labels`.
///
/// Each step produces `U_δ` such that `Uᵀ·G·U = G` and `Uᵀ·b·U` is
/// blockdiagonal for the grouping through order `δ`. Coordinates with
/// different labels must carry different `d`.
#[derive(Clone, Debug)]
pub struct OrderLoop {
    c: FactorSet,
    b: Vec<QMat>,
    d: Vec<Rational>,
    g: Option<Vec<Rational>>,
    labels: Vec<usize>,
    u: Vec<QMat>,
    ut: Vec<QMat>,
    gu: Vec<QMat>,
    au: Vec<QMat>,
    conj: Vec<QMat>,
    last: Option<[QMat; 3]>,
}

/// Quantities computed at one order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepTrace {
    pub delta: i64,
    pub s: RatMatrix,
    pub t: RatMatrix,
    pub q: RatMatrix,
    pub u: RatMatrix,
    /// Coefficient of `t^δ` in `Uᵀ·b·U`; blockdiagonal by construction.
    pub v: RatMatrix,
}

impl OrderLoop {
    /// Orthonormal setting: metric `I`, `coeffs[0]` diagonal, split `(r, n − r)`.
    pub fn new(coeffs: &[RatMatrix], r: usize, c: &FactorSet) -> Self {
        let d: Vec<Rational> = (0..coeffs[0].rows()).map(|i| coeffs[0].get(i, i).clone()).collect();
        let labels = (0..d.len()).map(|i| usize::from(i >= r)).collect();
        Self::with_metric(coeffs.iter().map(QMat::from_rat).collect(), d, None, labels, c)
    }

    pub(crate) fn with_metric(b: Vec<QMat>, d: Vec<Rational>, g: Option<Vec<Rational>>, labels: Vec<usize>, c: &FactorSet) -> Self {
        let n = d.len();
        let id = QMat::identity(n);
        let b0 = b[0].clone();
        OrderLoop {
            c: c.clone(),
            b,
            d,
            g,
            labels,
            u: vec![id.clone()],
            ut: vec![id.clone()],
            gu: vec![id.clone()],
            au: vec![b0.clone()],
            conj: vec![b0],
            last: None,
        }
    }

    pub fn order(&self) -> i64 {
        self.u.len() as i64
    }

    pub(crate) fn u(&self) -> &[QMat] {
        &self.u
    }

    pub(crate) fn conjugated(&self) -> &[QMat] {
        &self.conj
    }

    fn b(&self, k: usize) -> Option<&QMat> {
        self.b.get(k).filter(|m| !m.is_zero())
    }

    /// Computes the next `U_δ` and reports the intermediate matrices.
    pub fn step(&mut self) -> Result<StepTrace, DiagError> {
        self.advance()?;
        let [s, t, q] = self.last.clone().expect("advance records the step");
        Ok(StepTrace {
            delta: self.order() - 1,
            s: s.to_rat(),
            t: t.to_rat(),
            q: q.to_rat(),
            u: self.u.last().unwrap().to_rat(),
            v: self.conj.last().unwrap().to_rat(),
        })
    }

    pub(crate) fn advance(&mut self) -> Result<(), DiagError> {
        let delta = self.u.len();
        let n = self.d.len();
        let di = delta as i64;
        let c = &self.c;
        let s_terms: Vec<_> = (1..delta).map(|a| (&self.ut[a], &self.gu[delta - a], c.eval(a as i64, di - a as i64))).collect();
        let s = QMat::sum_products(n, n, &s_terms);
        let b_terms: Vec<_> = (1..=delta)
            .filter_map(|beta| self.b(beta).map(|bb| (bb, &self.u[delta - beta], c.eval(beta as i64, di - beta as i64))))
            .collect();
        let aup = QMat::sum_products(n, n, &b_terms);
        let t_terms: Vec<_> = (1..delta).map(|a| (&self.ut[a], &self.au[delta - a], c.eval(a as i64, di - a as i64))).collect();
        let tp = aup.add(&QMat::sum_products(n, n, &t_terms));
        if !s.is_symmetric() {
            return Err(DiagError::InvariantViolation(format!("S at order {delta} is not symmetric: {:?}", s.to_rat())));
        }
        if !tp.is_symmetric() {
            return Err(DiagError::InvariantViolation(format!("T at order {delta} is not symmetric: {:?}", tp.to_rat())));
        }
        let d = &self.d;
        let half = ratio(1, 2);
        let t = tp.sub(&s.map_entries(|i, j, x| x * (&d[i] + &d[j]) * &half));
        let labels = &self.labels;
        let q = t.map_entries(|i, j, x| if labels[i] != labels[j] && !x.is_zero() { x / (&d[j] - &d[i]) } else { Rational::zero() });
        if !q.is_antisymmetric() {
            return Err(DiagError::InvariantViolation(format!("Q at order {delta} is not antisymmetric")));
        }
        let x = q.add_scaled(&s, &-half);
        let u = match &self.g {
            Some(g) => x.scale_rows(&g.iter().map(|gi| Rational::one() / gi).collect::<Vec<_>>()),
            None => x.clone(),
        };
        let b0u = self.b[0].mul(&u);
        let cd = tp.add(&b0u).add(&b0u.transpose());
        if !cd.off_block_zero(&self.labels) {
            return Err(DiagError::InvariantViolation(format!("order {delta} leaves off-block coupling {:?}", cd.to_rat())));
        }
        self.au.push(aup.add(&b0u));
        self.ut.push(u.transpose());
        self.gu.push(x);
        self.u.push(u);
        self.conj.push(cd);
        self.last = Some([s, t, q]);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rat;

    #[test]
    fn first_order_of_the_two_by_two_fixture() {
        let a0 = RatMatrix::from_ints(&[&[1, 0], &[0, 2]]);
        let a1 = RatMatrix::from_ints(&[&[0, 1], &[1, 0]]);
        let mut lp = OrderLoop::new(&[a0, a1], 1, &FactorSet::trivial());
        let st = lp.step().unwrap();
        assert_eq!(st.delta, 1);
        assert!(st.s.is_zero());
        assert_eq!(st.t, RatMatrix::from_ints(&[&[0, 1], &[1, 0]]));
        assert_eq!(st.q, RatMatrix::from_ints(&[&[0, 1], &[-1, 0]]));
        assert_eq!(st.u, st.q);
        assert!(st.v.is_zero());
        // Second order: S₂ = U₁ᵀU₁ = I, so U₂ = −½I.
        let st2 = lp.step().unwrap();
        assert_eq!(st2.s, RatMatrix::identity(2));
        assert_eq!(st2.u, RatMatrix::diagonal(&[ratio(-1, 2), ratio(-1, 2)]));
        assert_eq!(st2.v, RatMatrix::diagonal(&[rat(-1), rat(1)]));
    }

    #[test]
    fn diagonal_input_keeps_blocks() {
        let a0 = RatMatrix::diagonal(&[rat(1), rat(2), rat(3)]);
        let a1 = RatMatrix::diagonal(&[rat(5), rat(0), rat(-1)]);
        let mut lp = OrderLoop::new(&[a0, a1], 1, &FactorSet::trivial());
        let st = lp.step().unwrap();
        assert!(st.q.is_zero());
        assert!(st.u.is_zero());
    }

    #[test]
    fn explicit_unit_factor_set_matches_trivial() {
        let a0 = RatMatrix::from_ints(&[&[1, 0, 0], &[0, 2, 0], &[0, 0, 2]]);
        let a1 = RatMatrix::from_ints(&[&[0, 1, 2], &[1, 1, 0], &[2, 0, -1]]);
        let a2 = RatMatrix::from_ints(&[&[3, 0, 1], &[0, 0, 1], &[1, 1, 0]]);
        let ones = FactorSet::custom("one", |_, _| Rational::one());
        let mut x = OrderLoop::new(&[a0.clone(), a1.clone(), a2.clone()], 1, &FactorSet::trivial());
        let mut y = OrderLoop::new(&[a0, a1, a2], 1, &ones);
        for _ in 0..5 {
            assert_eq!(x.step().unwrap(), y.step().unwrap());
        }
    }
}
