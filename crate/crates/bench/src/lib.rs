//! Deterministic workloads shared by the benchmarks.

use sympkit_core::{from_sturm_liouville, CMatrix, Complex64, SymplecticSystem, ToleranceConfig};

pub fn free_sl(horizon: usize) -> SymplecticSystem {
    from_sturm_liouville(&vec![1.0; horizon + 2], &vec![0.0; horizon + 1], &vec![1.0; horizon + 1])
        .expect("valid coefficients")
}

/// Matrix Sturm–Liouville system with `n × n` blocks
/// `S_k = [[I, −P⁻¹], [−Q, I + Q P⁻¹]]`, `Ψ_k = diag(I, 0)`, where `P_k` and
/// `Q_k` are tridiagonal with slowly varying entries.
pub fn matrix_sl(n: usize, horizon: usize) -> SymplecticSystem {
    let tridiagonal = |diag: f64, off: f64| {
        CMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => Complex64::new(diag, 0.0),
            1 => Complex64::new(off, 0.0),
            _ => Complex64::new(0.0, 0.0),
        })
    };
    SymplecticSystem::from_generator(n, horizon, ToleranceConfig::default(), |k| {
        let t = k as f64;
        let p = tridiagonal(2.0 + (0.3 * t).sin(), 0.25);
        let q = tridiagonal((0.7 * t).cos(), 0.1);
        let p_inv = p.try_inverse().expect("diagonally dominant");
        let eye = CMatrix::identity(n, n);
        let mut s = CMatrix::zeros(2 * n, 2 * n);
        s.view_mut((0, 0), (n, n)).copy_from(&eye);
        s.view_mut((0, n), (n, n)).copy_from(&(-&p_inv));
        s.view_mut((n, 0), (n, n)).copy_from(&(-&q));
        s.view_mut((n, n), (n, n)).copy_from(&(&eye + &q * &p_inv));
        let mut psi = CMatrix::zeros(2 * n, 2 * n);
        psi.view_mut((0, 0), (n, n)).copy_from(&eye);
        (s, psi)
    })
    .expect("valid dimensions")
}

/// Forcing `f_k = (cos k, sin k, …)ᵀ / (k + 1)` on `[0, horizon − 1]`.
pub fn forcing(dim: usize, horizon: usize, lambda: Complex64) -> sympkit_core::TrajectorySequence {
    let values = (0..horizon)
        .map(|k| CMatrix::from_fn(dim, 1, |i, _| Complex64::new(((k + i) as f64).cos(), (k as f64).sin()) / (k as f64 + 1.0)))
        .collect();
    sympkit_core::TrajectorySequence::new(0, values, lambda).expect("nonempty")
}
