use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ultraspec::spectral::{
    gen_self_adjoint_operator, normalized_decomposition, random_probe, spectral_decompose, tail_projection_norms, verify_all_projections,
    verify_eigenspace_orthogonality, verify_eigs_tend_to_zero, verify_norm_max, verify_reconstruction, verify_tail_norms,
};
use ultraspec::suite::{corrupt_eigenspace, corrupt_eigenvalue, corrupt_magnitude, corrupt_orthogonality};

const N: i64 = 16;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn decomposition_satisfies_every_check(seed in any::<u64>()) {
        let t = gen_self_adjoint_operator(seed);
        let dec = spectral_decompose(&t, N).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probes: Vec<_> = (0..20).map(|_| random_probe(&t, &mut rng)).collect();
        for v in [
            verify_reconstruction(&t, &dec, &probes),
            verify_norm_max(&t, &dec),
            verify_eigenspace_orthogonality(&dec),
            verify_all_projections(&t, &dec),
            verify_tail_norms(&tail_projection_norms(&t, &dec).unwrap()),
            verify_eigs_tend_to_zero(&dec),
        ] {
            prop_assert!(v.passed, "{}", v);
        }
    }

    #[test]
    fn normalized_decomposition_reconstructs_when_complete(seed in any::<u64>()) {
        let t = gen_self_adjoint_operator(seed);
        let dec = spectral_decompose(&t, N).unwrap();
        let norm = normalized_decomposition(&dec);
        if norm.is_complete() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..5 {
                let x = random_probe(&t, &mut rng);
                let diff = norm.reconstruct(&x).sub(&ultraspec::operators::apply(&t, &x));
                prop_assert!(diff.vanishes_below(N / 2), "{}", diff);
            }
        }
    }

    #[test]
    fn corrupted_decompositions_are_rejected(seed in any::<u64>()) {
        let t = gen_self_adjoint_operator(seed);
        let dec = spectral_decompose(&t, N).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probes: Vec<_> = (0..5).map(|_| random_probe(&t, &mut rng)).collect();
        if let Some(bad) = corrupt_eigenvalue(&dec) {
            prop_assert!(!verify_reconstruction(&t, &bad, &probes).passed);
        }
        if let Some(bad) = corrupt_orthogonality(&dec) {
            prop_assert!(!verify_eigenspace_orthogonality(&bad).passed);
        }
        if let Some(bad) = corrupt_eigenspace(&dec) {
            prop_assert!(!verify_all_projections(&t, &bad).passed);
        }
        if let Some(bad) = corrupt_magnitude(&dec) {
            prop_assert!(!verify_norm_max(&t, &bad).passed);
        }
    }
}
