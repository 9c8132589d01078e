mod common;

use proptest::prelude::*;
use ultraspec::hahn::{diagonalize, gen_test_instance, verify, RationalRootOracle};
use ultraspec::scalars::{rat, FactorSet, Rational};

const N: i64 = 12;

fn sorted(mut v: Vec<Rational>) -> Vec<Rational> {
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_instances_verify(n in 1usize..=6, seed in any::<u64>(), depth in 0usize..=4) {
        let inst = gen_test_instance(n, seed, depth);
        let r = diagonalize(&inst.matrix, N, &FactorSet::trivial(), &RationalRootOracle).unwrap();
        let rep = verify(&r, &inst.matrix, N);
        prop_assert!(rep.passed(), "{:?}", rep.failures);
        prop_assert!(r.gram.iter().all(|g| *g == rat(1)));
    }

    #[test]
    fn residues_reduce_to_the_base_diagonalization(n in 1usize..=5, seed in any::<u64>(), depth in 0usize..=3) {
        let inst = gen_test_instance(n, seed, depth);
        let r = diagonalize(&inst.matrix, N, &FactorSet::trivial(), &RationalRootOracle).unwrap();
        let d0: Vec<Rational> = r.d.diagonal_entries().iter().map(|s| s.coeff(0)).collect();
        prop_assert_eq!(sorted(d0), sorted(inst.d0.clone()));
        // The residue of U is orthogonal.
        let u0: Vec<Vec<Rational>> = r.u.entries().iter().map(|row| row.iter().map(|s| s.coeff(0)).collect()).collect();
        for i in 0..n {
            for j in 0..n {
                let dot: Rational = (0..n).map(|k| u0[k][i].clone() * u0[k][j].clone()).sum();
                prop_assert_eq!(dot, if i == j { rat(1) } else { rat(0) });
            }
        }
    }

    #[test]
    fn permuting_coordinates_permutes_d(n in 2usize..=5, seed in any::<u64>(), depth in 0usize..=3, shift in 1usize..5) {
        let inst = gen_test_instance(n, seed, depth);
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let c = FactorSet::trivial();
        let a = diagonalize(&inst.matrix, N, &c, &RationalRootOracle).unwrap();
        let b = diagonalize(&inst.matrix.permuted(&perm), N, &c, &RationalRootOracle).unwrap();
        let mut da: Vec<String> = a.d.diagonal_entries().iter().map(|s| s.to_string()).collect();
        let mut db: Vec<String> = b.d.diagonal_entries().iter().map(|s| s.to_string()).collect();
        da.sort();
        db.sort();
        prop_assert_eq!(da, db);
    }

    #[test]
    fn twisted_factor_set_still_verifies(n in 1usize..=5, seed in any::<u64>(), depth in 0usize..=3) {
        let inst = gen_test_instance(n, seed, depth);
        let r = diagonalize(&inst.matrix, N, &FactorSet::exponential(rat(2)), &RationalRootOracle).unwrap();
        let rep = verify(&r, &inst.matrix, N);
        prop_assert!(rep.passed(), "{:?}", rep.failures);
    }
}
