mod common;

use common::arb_nonzero_series;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ultraspec::fredholm::{
    analytic_max_modulus, delta_n_estimate, gen_analytic_series, gen_unit_family, random_ball_point, resolvent_bound_scan,
    vol_perturbation_check,
};
use ultraspec::linalg::volume;
use ultraspec::operators::{op_norm_val, OperatorC0};
use ultraspec::scalars::{LaurentSeries, Valuation};
use ultraspec::spectral::gen_self_adjoint_operator;

fn diagonal(entries: &[LaurentSeries]) -> OperatorC0 {
    let d = entries.len();
    let block = (0..d).map(|i| (0..d).map(|j| if i == j { entries[i].clone() } else { LaurentSeries::zero() }).collect()).collect();
    OperatorC0::new(block, Vec::new()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn max_modulus_bound_and_witness(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = gen_analytic_series(&mut rng);
        let samples: Vec<LaurentSeries> = (0..6).map(|_| random_ball_point(f.radius_val, &mut rng)).collect();
        let report = analytic_max_modulus(&f, &samples, 8).unwrap();
        prop_assert!(report.upper_bound_holds);
        if let Ok((_, v)) = report.witness {
            prop_assert_eq!(v, report.rhs);
        }
    }

    #[test]
    fn delta_of_diagonal_is_sum_of_smallest_valuations(entries in prop::collection::vec(arb_nonzero_series(), 1..5), k in 0usize..4) {
        let n = k % entries.len() + 1;
        let mut vals: Vec<i64> = entries.iter().map(|e| e.valuation().finite().unwrap()).collect();
        vals.sort();
        let expected: i64 = vals[..n].iter().sum();
        let est = delta_n_estimate(&diagonal(&entries), n, &[]).unwrap();
        prop_assert_eq!(est.lower_bound, Valuation::Finite(expected));
        prop_assert_eq!(est.gap(), Some(0));
    }

    #[test]
    fn delta_lower_bound_never_beats_column_bound(seed in any::<u64>(), n in 1usize..4) {
        let t = gen_self_adjoint_operator(seed);
        let est = delta_n_estimate(&t, n, &[]).unwrap();
        if let Some(gap) = est.gap() {
            prop_assert!(gap >= 0, "gap {}", gap);
        }
        if est.upper_bound.is_infinite() {
            prop_assert!(est.lower_bound.is_infinite());
        }
    }

    #[test]
    fn small_perturbations_keep_the_volume(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = gen_unit_family(&mut rng);
        let base = volume(&xs).unwrap().finite().unwrap();
        let verdict = vol_perturbation_check(&xs, base + 1, 8, &mut rng).unwrap();
        prop_assert!(verdict.passed, "{}", verdict.detail);
    }

    #[test]
    fn resolvent_is_bounded_on_the_contractive_ball(seed in any::<u64>()) {
        let t = gen_self_adjoint_operator(seed);
        let v_r = 1 - op_norm_val(&t).lower_bound().unwrap_or(0);
        let report = resolvent_bound_scan(&t, v_r, 3, 16).unwrap();
        prop_assert!(report.bounded());
        prop_assert!(report.max_norm.at_least(0));
    }
}
