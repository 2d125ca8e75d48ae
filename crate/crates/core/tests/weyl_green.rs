mod common;

use common::*;
use proptest::prelude::*;
use sympkit_core::{
    approx_half_line_m, boundary_m, boundary_m_forward, count_square_summable, disk_indicator, linalg,
    natural_fundamental, AlphaMatrix, CMatrix, Complex64, GreenTable, SymplecticSystem, SympError, TrajectorySequence,
    WeylState,
};

const THRESHOLD: f64 = 1.0 + 1e-6;

/// Decaying root of `μ² − (2 − λ) μ + 1 = 0`.
fn free_sl_decaying_root(lam: Complex64) -> Complex64 {
    let b = c(2.0, 0.0) - lam;
    let disc = (b * b - c(4.0, 0.0)).sqrt();
    let (r1, r2) = ((b + disc) / 2.0, (b - disc) / 2.0);
    if r1.norm() < r2.norm() { r1 } else { r2 }
}

/// Number of eigenvalues of a constant `𝕊(λ)` outside the unit circle.
fn expanding_modes(sys: &SymplecticSystem, lam: Complex64) -> usize {
    let s = sys.s_lambda(0, lam).unwrap();
    let eig = s.schur().eigenvalues().expect("complex Schur form is triangular");
    eig.iter().filter(|mu| mu.norm() > 1.0).count()
}

fn constant_matrix_sl(seed: u64, n: usize, horizon: usize) -> SymplecticSystem {
    let mut r = rng(seed);
    let one = random_matrix_sl(&mut r, n, 1);
    SymplecticSystem::constant(
        one.s(0).unwrap().clone(),
        one.psi(0).unwrap().clone(),
        horizon,
        Default::default(),
    )
    .unwrap()
}

fn scalar(z: Complex64) -> CMatrix {
    CMatrix::from_element(1, 1, z)
}

#[test]
fn free_sl_half_line_m_matches_closed_form() {
    let sys = free_sl(400);
    let alpha = AlphaMatrix::first_block(1);
    for lam in [c(0.0, 1.0), c(0.0, -1.0), c(1.5, 0.5), c(-2.0, 3.0)] {
        let mu = free_sl_decaying_root(lam);
        let oracle = c(1.0, 0.0) - c(1.0, 0.0) / mu;
        let est = approx_half_line_m(&sys, lam, &alpha, &alpha, &[100, 200, 400]).unwrap();
        assert!((est.m_plus[(0, 0)] - oracle).norm() < 1e-9, "{lam}: {} vs {oracle}", est.m_plus[(0, 0)]);
        for it in &est.trace {
            assert!(it.nevanlinna_min >= 0.0, "{lam} N={}", it.n);
            assert!(it.in_disk);
        }
        assert!(est.last_drift().unwrap() < 1e-9);
    }
}

#[test]
fn indicator_starts_at_imaginary_part() {
    let sys = free_sl(5);
    let alpha = AlphaMatrix::new(real(1, 2, &[0.6, 0.8]), 1e-12).unwrap();
    for lam in [c(0.3, 2.0), c(0.3, -2.0)] {
        let m = scalar(c(0.4, -1.3));
        let e0 = disk_indicator(&sys, 0, lam, &alpha, &m).unwrap();
        let delta = lam.im.signum();
        assert!((e0[(0, 0)] - c(-2.0 * delta * m[(0, 0)].im, 0.0)).norm() < 1e-14);
    }
}

#[test]
fn indicator_rejects_real_lambda() {
    let sys = free_sl(5);
    let alpha = AlphaMatrix::first_block(1);
    assert!(matches!(disk_indicator(&sys, 2, c(0.5, 0.0), &alpha, &scalar(c(0.0, 1.0))), Err(SympError::RealLambda(_))));
}

#[test]
fn degenerate_boundary_problem_is_reported() {
    // (0, 1) solves the identity system and meets both conditions for every λ.
    let sys = identity_system(30);
    let first = AlphaMatrix::first_block(1);
    for lam in [c(0.0, 1.0), c(1.0, -2.0)] {
        assert!(matches!(boundary_m(&sys, lam, &first, &first, 30), Err(SympError::BoundaryCondition(30))));
        assert!(matches!(
            approx_half_line_m(&sys, lam, &first, &first, &[10, 20, 30]),
            Err(SympError::BoundaryCondition(_))
        ));
        let (m, _) = boundary_m(&sys, lam, &first, &AlphaMatrix::second_block(1), 30).unwrap();
        assert!(m.iter().all(|x| x.is_finite()));
    }
}

#[test]
fn boundary_m_lies_on_circle_at_n() {
    let mut r = rng(31);
    let sys = random_matrix_sl(&mut r, 2, 30);
    let alpha = AlphaMatrix::first_block(2);
    let beta = AlphaMatrix::first_block(2);
    let lam = c(0.4, 0.7);
    let (m, x) = boundary_m(&sys, lam, &alpha, &beta, 30).unwrap();
    let e = disk_indicator(&sys, 30, lam, &alpha, &m).unwrap();
    let scale = x.value(30).unwrap().norm().powi(2).max(1.0);
    assert!(e.norm() < 1e-8 * scale);
    assert!((beta.value() * x.value(30).unwrap()).norm() < 1e-10 * x.value(30).unwrap().norm().max(1.0));
    assert!((alpha.value() * x.value(0).unwrap() - eye(2)).norm() < 1e-12);
}

#[test]
fn limit_circle_toy_has_two_summable_solutions() {
    let sys = limit_circle_toy(120, 10);
    for lam in [c(0.0, 1.0), c(1.0, -1.0)] {
        let est = count_square_summable(&sys, lam, &[40, 80, 120], THRESHOLD).unwrap();
        assert_eq!(est.d, 2);
    }
}

#[test]
fn identity_system_has_one_summable_solution() {
    let sys = identity_system(150);
    let est = count_square_summable(&sys, c(0.0, 2.0), &[50, 100, 150], THRESHOLD).unwrap();
    assert_eq!(est.d, 1);
}

#[test]
fn constant_systems_match_eigenvalue_count() {
    for seed in 0..6u64 {
        for n in 1..=2 {
            let sys = constant_matrix_sl(100 + seed, n, 160);
            for lam in [c(0.0, 1.0), c(-0.5, -0.8)] {
                let oracle = expanding_modes(&sys, lam);
                let est = count_square_summable(&sys, lam, &[40, 80, 160], THRESHOLD).unwrap();
                assert_eq!(est.d, oracle, "seed={seed} n={n} {lam}: {:?}", est.pairs.last());
            }
        }
    }
}

#[test]
fn green_table_identities() {
    let mut r = rng(32);
    let systems = [free_sl(120), random_matrix_sl(&mut r, 2, 120), random_system(&mut r, 1, 60)];
    for sys in &systems {
        let n = sys.n();
        let alpha = AlphaMatrix::first_block(n);
        for lam in [c(0.0, 1.0), c(0.5, -0.7)] {
            let table = GreenTable::with_boundary_condition(sys, lam, &alpha, &alpha, sys.horizon()).unwrap();
            assert!(table.m_symmetry_residual() < 1e-10 * table.m_plus.norm().max(1.0));
            let p = table.properties(30).unwrap();
            assert!(p.max_abs() < 1e-8, "{p:?}");
        }
    }
}

#[test]
fn green_decays_away_from_diagonal() {
    let sys = free_sl(150);
    let alpha = AlphaMatrix::first_block(1);
    let table = GreenTable::with_boundary_condition(&sys, c(0.0, 1.0), &alpha, &alpha, 150).unwrap();
    assert!(table.decay_trace().iter().all(|&w| w < 1e-12));
    let norms = table.x_plus_norms();
    assert!(norms.windows(2).take(100).all(|w| w[1] < w[0]));
    assert!(norms[100] < 1e-10 * norms[0]);
    let near = table.green(5, 6).unwrap().norm();
    let far = table.green(5, 60).unwrap().norm();
    assert!(far < 1e-6 * near);
}

#[test]
fn forward_m_pair_exact_for_limit_circle() {
    let sys = limit_circle_toy(40, 8);
    let alpha = AlphaMatrix::first_block(1);
    let beta = AlphaMatrix::second_block(1);
    let lam = c(0.2, 1.0);
    let (m, _) = boundary_m(&sys, lam, &alpha, &beta, 40).unwrap();
    let (m_bar, _) = boundary_m(&sys, lam.conj(), &alpha, &beta, 40).unwrap();
    let table = GreenTable::from_m_pair(&sys, lam, &alpha, &m, &m_bar, 40).unwrap();
    let p = table.properties(40).unwrap();
    assert!(p.max_abs() < 1e-8, "{p:?}");

    // An M(λ̄) that is not M(λ)* breaks the jump condition.
    let wrong = &m_bar + scalar(c(0.0, 0.5));
    let bad = GreenTable::from_m_pair(&sys, lam, &alpha, &m, &wrong, 40).unwrap();
    let q = bad.properties(40).unwrap();
    assert!(q.diagonal_jump.abs > 1e-2, "{q:?}");
    assert!(q.wronskian_identity.abs > 1e-2);
    // the recursion only involves one of the two solutions and still holds
    assert!(q.off_diagonal_recursion.rel < 1e-10);
}

#[test]
fn zhat_solves_with_bound() {
    let mut r = rng(33);
    let sys = random_matrix_sl(&mut r, 2, 80);
    let alpha = AlphaMatrix::first_block(2);
    let lam = c(0.3, 0.6);
    let table = GreenTable::with_boundary_condition(&sys, lam, &alpha, &alpha, 80).unwrap();
    for _ in 0..10 {
        let f = random_sequence(&mut r, 4, 1, 79, lam);
        let rep = table.zhat(&f).unwrap();
        assert!(rep.recursion.abs < 1e-8, "{:?}", rep.recursion);
        assert!(rep.alpha_residual < 1e-10);
        assert!(rep.bound_holds, "{} > {}", rep.norm, rep.bound);
        assert!((alpha.value() * rep.solution.value(80).unwrap()).norm() < 1e-8);
    }
    let v = random_matrix(&mut r, 2, 1, 1.0);
    let f = random_sequence(&mut r, 4, 1, 79, lam);
    let y = table.yhat(&v, &f).unwrap();
    assert!(y.alpha_residual < 1e-10);
    assert!(y.recursion.abs < 1e-8);
    assert!(y.bound_holds);
}

#[test]
fn zhat_rejects_short_forcing() {
    let sys = free_sl(20);
    let alpha = AlphaMatrix::first_block(1);
    let table = GreenTable::with_boundary_condition(&sys, c(0.0, 1.0), &alpha, &alpha, 20).unwrap();
    let f = TrajectorySequence::zeros(2, 1, 10, c(0.0, 1.0));
    assert!(matches!(table.zhat(&f), Err(SympError::DimensionMismatch(_))));
    assert!(matches!(
        GreenTable::with_boundary_condition(&sys, c(1.0, 0.0), &alpha, &alpha, 20),
        Err(SympError::RealLambda(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn disks_are_nested(seed in any::<u64>(), n in 1usize..=2, mre in -2.0f64..2.0, mim in -2.0f64..2.0) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, n, 25);
        let lam = random_nonreal(&mut r, 1.5);
        let alpha = AlphaMatrix::first_block(n);
        let m = CMatrix::from_fn(n, n, |i, k| if i == k { c(mre, mim) } else { random_complex(&mut r, 0.5) });
        let state = WeylState::new(&sys, lam, &alpha, &m).unwrap();
        for k in 0..25 {
            let xk = state.x.value(k).unwrap();
            let step = &state.ek_trace[k + 1] - &state.ek_trace[k];
            let oracle = xk.adjoint() * sys.psi(k).unwrap() * xk * c(2.0 * lam.im.abs(), 0.0);
            let scale = state.ek_trace[k + 1].norm().max(1.0);
            prop_assert!((&step - &oracle).norm() < 1e-9 * scale, "k={}", k);
            prop_assert!(linalg::min_eigenvalue(&step) >= -1e-9 * scale);
        }
    }

    #[test]
    fn boundary_m_symmetric_and_nevanlinna(seed in any::<u64>(), n in 1usize..=2, nb in 5usize..40) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, n, 40);
        let lam = random_nonreal(&mut r, 1.5);
        let alpha = AlphaMatrix::first_block(n);
        let beta = AlphaMatrix::second_block(n);
        let (m, _) = boundary_m(&sys, lam, &alpha, &beta, nb).unwrap();
        let (m_bar, _) = boundary_m(&sys, lam.conj(), &alpha, &beta, nb).unwrap();
        prop_assert!((m.adjoint() - &m_bar).norm() < 1e-8 * m.norm().max(1.0));
        let im_part = (&m - m.adjoint()) * c(0.0, -0.5 * lam.im.signum());
        prop_assert!(linalg::min_eigenvalue(&im_part) >= -1e-9 * m.norm().max(1.0));
    }

    #[test]
    fn backward_and_forward_routes_agree(seed in any::<u64>(), n in 1usize..=2, nb in 2usize..12) {
        let mut r = rng(seed);
        let sys = random_matrix_sl(&mut r, n, 12);
        let lam = random_nonreal(&mut r, 1.0);
        let alpha = AlphaMatrix::first_block(n);
        let beta = AlphaMatrix::first_block(n);
        let (m, _) = boundary_m(&sys, lam, &alpha, &beta, nb).unwrap();
        let forward = boundary_m_forward(&sys, lam, &alpha, &beta, nb).unwrap();
        prop_assert!((&m - &forward).norm() < 1e-8 * m.norm().max(1.0));
    }

    #[test]
    fn weyl_solution_reconstructs(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, n, 15);
        let lam = random_nonreal(&mut r, 1.5);
        let alpha = AlphaMatrix::second_block(n);
        let m = random_matrix(&mut r, n, n, 1.0);
        let nf = natural_fundamental(&sys, lam, &alpha).unwrap();
        let state = WeylState::new(&sys, lam, &alpha, &m).unwrap();
        prop_assert!(state.reconstruction_residual(&nf).unwrap() < 1e-10);
    }

    #[test]
    fn summable_count_within_bounds(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let sys = random_matrix_sl(&mut r, n, 120);
        let lam = random_nonreal(&mut r, 1.5);
        let est = count_square_summable(&sys, lam, &[40, 80, 120], THRESHOLD).unwrap();
        prop_assert!(n <= est.d && est.d <= 2 * n, "d={}", est.d);
    }
}
