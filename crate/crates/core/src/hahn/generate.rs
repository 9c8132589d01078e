//! Random symmetric matrices over ℚ[t] whose diagonalization is known to
//! succeed: `A = Oᵀ(D₀ + Σ_γ t^γ E_γ)O` with `O` rational orthogonal.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ratmat::RatMatrix;
use super::SymSeriesMatrix;
use crate::scalars::{rat, ratio, LaurentSeries, Rational};

#[derive(Clone, Debug)]
pub struct TestInstance {
    pub matrix: SymSeriesMatrix,
    pub o: RatMatrix,
    pub d0: Vec<Rational>,
    /// `E_γ` for `γ = 1..=t_depth`.
    pub perturbations: Vec<RatMatrix>,
}

/// `(I − S)(I + S)⁻¹` for antisymmetric `S`; exactly orthogonal.
pub fn cayley(s: &RatMatrix) -> RatMatrix {
    let n = s.rows();
    let id = RatMatrix::identity(n);
    let inv = id.add(s).inverse().expect("I + S is invertible for antisymmetric S");
    id.sub(s).mul(&inv)
}

pub fn gen_test_matrix(n: usize, seed: u64, t_depth: usize) -> SymSeriesMatrix {
    gen_test_instance(n, seed, t_depth).matrix
}

pub fn gen_test_instance(n: usize, seed: u64, t_depth: usize) -> TestInstance {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s_pool = [rat(-1), ratio(-1, 2), rat(0), rat(0), ratio(1, 2), rat(1)];
    let mut s = RatMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = s_pool.choose(&mut rng).unwrap().clone();
            s.set(j, i, -v.clone());
            s.set(i, j, v);
        }
    }
    let o = cayley(&s);

    let d0: Vec<Rational> = if t_depth == 0 {
        let mut pool: Vec<i64> = (-(n as i64) - 2..=n as i64 + 2).collect();
        pool.shuffle(&mut rng);
        pool[..n].iter().map(|&k| rat(k)).collect()
    } else {
        (0..n).map(|_| rat(rng.gen_range(-2..=2))).collect()
    };

    let mut perturbations = Vec::new();
    for gamma in 1..=t_depth {
        let mut e = RatMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rat(rng.gen_range(-2..=2));
                e.set(i, j, v.clone());
                e.set(j, i, v);
            }
        }
        if gamma == 1 {
            // Inside each degenerate group of D₀: diagonal with distinct entries.
            let mut done = vec![false; n];
            for i in 0..n {
                if done[i] {
                    continue;
                }
                let group: Vec<usize> = (i..n).filter(|&k| d0[k] == d0[i]).collect();
                let mut vals: Vec<i64> = (-4..=4).collect();
                vals.shuffle(&mut rng);
                for (a, &p) in group.iter().enumerate() {
                    done[p] = true;
                    for &q in &group {
                        if p != q {
                            e.set(p, q, rat(0));
                        }
                    }
                    e.set(p, p, rat(vals[a]));
                }
            }
        }
        perturbations.push(e);
    }

    let ot = o.transpose();
    let mut coeffs = vec![ot.mul(&RatMatrix::diagonal(&d0)).mul(&o)];
    coeffs.extend(perturbations.iter().map(|e| ot.mul(e).mul(&o)));
    let matrix = SymSeriesMatrix::from_fn(n, |i, j| {
        LaurentSeries::from_terms(coeffs.iter().enumerate().map(|(g, m)| (g as i64, m.get(i, j).clone())), None)
    });
    TestInstance { matrix, o, d0, perturbations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cayley_of_quarter_turn() {
        let s = RatMatrix::from_ints(&[&[0, 1], &[-1, 0]]);
        let o = cayley(&s);
        assert_eq!(o, RatMatrix::from_ints(&[&[0, -1], &[1, 0]]));
        assert_eq!(o.transpose().mul(&o), RatMatrix::identity(2));
    }

    #[test]
    fn zero_generator_is_identity() {
        assert_eq!(cayley(&RatMatrix::zeros(3, 3)), RatMatrix::identity(3));
    }

    #[test]
    fn instances_are_reproducible_and_orthogonal() {
        let a = gen_test_instance(5, 7, 3);
        let b = gen_test_instance(5, 7, 3);
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.o.transpose().mul(&a.o), RatMatrix::identity(5));
        assert_eq!(a.perturbations.len(), 3);
        let one = gen_test_matrix(1, 3, 2);
        assert_eq!(one.size(), 1);
    }
}
