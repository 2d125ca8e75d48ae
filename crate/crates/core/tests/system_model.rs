mod common;

use common::*;
use proptest::prelude::*;
use sympkit_core::{
    build_v, from_sturm_liouville, make_j, CMatrix, CoefficientSequence, SymplecticSystem, SympError,
    ToleranceConfig, TrajectorySequence, Violation,
};

fn frob(m: &CMatrix) -> f64 {
    m.norm()
}

#[test]
fn generators_satisfy_hypotheses() {
    let mut r = rng(1);
    for n in 1..=3 {
        for _ in 0..5 {
            let sys = random_system(&mut r, n, 6);
            let report = sys.validate_hypotheses();
            assert!(report.passed(), "{:?}", report.first_failure());
            let sl = random_matrix_sl(&mut r, n, 6);
            assert!(sl.validate_hypotheses().passed());
        }
    }
}

#[test]
fn free_sturm_liouville_blocks() {
    let sys = free_sl(4);
    let s = sys.s(0).unwrap();
    assert!(frob(&(s - real(2, 2, &[1.0, -1.0, 0.0, 1.0]))) < 1e-15);
    let v = sys.v(0).unwrap();
    assert!(frob(&(v - real(2, 2, &[0.0, 0.0, 1.0, -1.0]))) < 1e-15);
}

#[test]
fn sturm_liouville_rejects_zero_p() {
    assert!(from_sturm_liouville(&[1.0, 0.0, 1.0], &[0.0, 0.0], &[1.0, 1.0]).is_err());
    assert!(from_sturm_liouville(&[1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0]).is_err());
}

#[test]
fn violations_are_named() {
    let j2 = make_j(1).unwrap();
    let bad_s = real(2, 2, &[2.0, 0.0, 0.0, 2.0]);
    let sys = SymplecticSystem::constant(bad_s, CMatrix::zeros(2, 2), 2, ToleranceConfig::default()).unwrap();
    let report = sys.validate_hypotheses();
    assert!(!report.passed());
    assert_eq!(report.violation_kinds(), vec![Violation::NotSymplectic]);

    let neg = real(2, 2, &[-1.0, 0.0, 0.0, 0.0]);
    let sys = SymplecticSystem::constant(eye(2), neg, 2, ToleranceConfig::default()).unwrap();
    assert!(sys.validate_hypotheses().violation_kinds().contains(&Violation::NotSemiDefinite));

    let full = eye(2);
    let sys = SymplecticSystem::constant(eye(2), full, 2, ToleranceConfig::default()).unwrap();
    assert!(sys.validate_hypotheses().violation_kinds().contains(&Violation::WeightNotIsotropic));

    let skew = &j2 * c(1.0, 0.0);
    let sys = SymplecticSystem::constant(eye(2), skew, 2, ToleranceConfig::default()).unwrap();
    assert!(sys.validate_hypotheses().violation_kinds().contains(&Violation::NotHermitian));
}

#[test]
fn dimension_errors() {
    assert!(matches!(make_j(0), Err(SympError::InvalidDimension(_))));
    assert!(CoefficientSequence::new(1, 2, vec![eye(2); 2], vec![eye(2); 3]).is_err());
    assert!(CoefficientSequence::new(1, 1, vec![eye(3); 2], vec![eye(2); 2]).is_err());
    assert!(build_v(&eye(2), &eye(4)).is_err());
    let sys = free_sl(3);
    assert!(matches!(sys.s(4), Err(SympError::OutOfHorizon { index: 4, horizon: 3 })));
    assert!(ToleranceConfig::new(-1.0, 1e-10, 1e-10).is_err());
}

#[test]
fn semi_inner_product_identity_system() {
    let sys = identity_system(3);
    let lam = c(0.0, 1.0);
    let z = TrajectorySequence::from_vectors(vec![vector(&[c(1.0, 0.0), c(5.0, 0.0)]); 4], lam);
    let w = TrajectorySequence::from_vectors(vec![vector(&[c(0.0, 2.0), c(-3.0, 0.0)]); 4], lam);
    let ip = sys.semi_inner(&z, &w, 0..=3).unwrap();
    assert!((ip[(0, 0)] - c(0.0, 8.0)).norm() < 1e-14);
    assert!((sys.semi_norm(&z, 0..=3).unwrap() - 2.0).abs() < 1e-14);
}

#[test]
fn truncation_keeps_prefix() {
    let mut r = rng(2);
    let sys = random_system(&mut r, 2, 8);
    let short = sys.truncated(3).unwrap();
    assert_eq!(short.horizon(), 3);
    for k in 0..=3 {
        assert_eq!(short.s(k).unwrap(), sys.s(k).unwrap());
    }
    assert!(sys.truncated(9).is_err());
}

fn system_strategy() -> impl Strategy<Value = (u64, usize)> {
    (any::<u64>(), 1usize..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symplectic_identity_for_all_lambda((seed, n) in system_strategy(), re in -5.0f64..5.0, im in -5.0f64..5.0) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, n, 3);
        let lam = c(re, im);
        let j = sys.j().clone();
        for k in 0..=3 {
            let s = sys.s_lambda(k, lam).unwrap();
            let s_bar = sys.s_lambda(k, lam.conj()).unwrap();
            let res = frob(&(s_bar.adjoint() * &j * &s - &j));
            prop_assert!(res <= 1e-10 * frob(&s).powi(2).max(1.0), "k={} res={}", k, res);
            let inv = sys.s_lambda_inverse(k, lam).unwrap();
            prop_assert!(frob(&(&inv * &s - eye(2 * n))) <= 1e-10 * frob(&s).powi(2).max(1.0));
            let det_dev = (s.determinant().norm() - 1.0).abs();
            prop_assert!(det_dev <= 1e-8 * frob(&s).powi(2 * n as i32).max(1.0), "det {}", det_dev);
        }
    }

    #[test]
    fn weight_roundtrip((seed, n) in system_strategy(), re in -5.0f64..5.0, im in -5.0f64..5.0) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, n, 2);
        let lam = c(re, im);
        for k in 0..=2 {
            let jpsi = sys.j() * sys.psi(k).unwrap();
            let plus = eye(2 * n) + &jpsi * lam;
            let minus = eye(2 * n) - &jpsi * lam;
            prop_assert!(frob(&(minus * plus - eye(2 * n))) < 1e-9 * (1.0 + lam.norm() * frob(&jpsi)).powi(2));
            let v = build_v(sys.s(k).unwrap(), sys.psi(k).unwrap()).unwrap();
            prop_assert!(frob(&(v - sys.v(k).unwrap())) == 0.0);
        }
    }

    #[test]
    fn semi_inner_is_hermitian_and_cauchy_schwarz((seed, n) in system_strategy()) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, n, 4);
        let lam = c(0.0, 1.0);
        let z = random_sequence(&mut r, 2 * n, 1, 4, lam);
        let w = random_sequence(&mut r, 2 * n, 1, 4, lam);
        let zw = sys.semi_inner(&z, &w, 0..=4).unwrap()[(0, 0)];
        let wz = sys.semi_inner(&w, &z, 0..=4).unwrap()[(0, 0)];
        prop_assert!((zw - wz.conj()).norm() < 1e-10 * (1.0 + zw.norm()));
        let nz = sys.semi_norm(&z, 0..=4).unwrap();
        let nw = sys.semi_norm(&w, 0..=4).unwrap();
        prop_assert!(zw.norm() <= nz * nw * (1.0 + 1e-10) + 1e-12);
    }
}
