use proptest::prelude::*;
use udist::linalg::{cis, haar_random_unitary, ComplexMatrix, StateVector};
use udist::umetric::{d_psi_unchecked, Metric};

fn pair(n: usize, seed: u64) -> (ComplexMatrix, ComplexMatrix) {
    (
        haar_random_unitary(n, seed),
        haar_random_unitary(n, seed ^ 0x9e37_79b9),
    )
}

fn d(u: &ComplexMatrix, v: &ComplexMatrix) -> f64 {
    Metric::default().u_distance_arc(u, v).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distance_in_unit_interval(n in 1usize..=5, seed: u64) {
        let (u, v) = pair(n, seed);
        let x = d(&u, &v);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!(d(&u, &u) <= 1e-12);
    }

    #[test]
    fn symmetric_and_phase_blind(n in 1usize..=5, seed: u64, phi in 0.0..std::f64::consts::TAU) {
        let (u, v) = pair(n, seed);
        let x = d(&u, &v);
        prop_assert!((x - d(&v, &u)).abs() <= 1e-10);
        prop_assert!((x - d(&u, &v.scale(cis(phi)))).abs() <= 1e-10);
    }

    #[test]
    fn translation_invariant(n in 1usize..=4, seed: u64) {
        let (u, v) = pair(n, seed);
        let w = haar_random_unitary(n, seed.wrapping_add(1));
        let x = d(&u, &v);
        prop_assert!((x - d(&w.matmul(&u).unwrap(), &w.matmul(&v).unwrap())).abs() <= 1e-9);
        prop_assert!((x - d(&u.matmul(&w).unwrap(), &v.matmul(&w).unwrap())).abs() <= 1e-9);
    }

    #[test]
    fn state_distance_never_exceeds_operator_distance(n in 1usize..=4, seed: u64) {
        let (u, v) = pair(n, seed);
        let col = haar_random_unitary(n, seed.wrapping_mul(3));
        let psi = StateVector::new(col.column(0)).unwrap();
        let dp = d_psi_unchecked(&u, &v, &psi).unwrap();
        prop_assert!((0.0..=1.0).contains(&dp));
        prop_assert!(dp <= d(&u, &v) + 1e-9);
    }
}
