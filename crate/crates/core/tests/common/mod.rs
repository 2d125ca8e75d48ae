#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sympkit_core::{
    from_sturm_liouville, CMatrix, CVector, Complex64, SymplecticSystem, ToleranceConfig, TrajectorySequence,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn eye(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn j(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = c(1.0, 0.0);
        m[(n + i, i)] = c(-1.0, 0.0);
    }
    m
}

pub fn real(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, k| c(entries[i * cols + k], 0.0))
}

pub fn random_complex(rng: &mut impl Rng, scale: f64) -> Complex64 {
    c(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_complex(rng, scale))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> CMatrix {
    let a = random_matrix(rng, n, n, scale);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

pub fn random_psd(rng: &mut impl Rng, n: usize, scale: f64) -> CMatrix {
    let a = random_matrix(rng, n, n, scale);
    &a * a.adjoint()
}

/// A nonzero complex number off the real axis with `0.2 ≤ |Im λ|`.
pub fn random_nonreal(rng: &mut impl Rng, radius: f64) -> Complex64 {
    let re = rng.random_range(-radius..radius);
    let im = rng.random_range(0.2..radius);
    if rng.random_bool(0.5) { c(re, im) } else { c(re, -im) }
}

fn blocks(n: usize, a: &CMatrix, b: &CMatrix, cc: &CMatrix, d: &CMatrix) -> CMatrix {
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(cc);
    m.view_mut((n, n), (n, n)).copy_from(d);
    m
}

/// Product of the generators `[[I, B], [0, I]]`, `[[I, 0], [C, I]]` and
/// `[[A, 0], [0, A^{-*}]]` with Hermitian `B`, `C`.
pub fn random_symplectic(rng: &mut impl Rng, n: usize, scale: f64) -> CMatrix {
    let i = eye(n);
    let z = CMatrix::zeros(n, n);
    let upper = blocks(n, &i, &random_hermitian(rng, n, scale), &z, &i);
    let lower = blocks(n, &i, &z, &random_hermitian(rng, n, scale), &i);
    let a = &i + random_matrix(rng, n, n, 0.3 * scale);
    let a_inv_star = a.clone().try_inverse().expect("near identity").adjoint();
    let dilation = blocks(n, &a, &z, &z, &a_inv_star);
    upper * dilation * lower
}

/// `Ψ = T* diag(W, 0) T` with symplectic `T` and `W ⩾ 0`.
pub fn random_weight(rng: &mut impl Rng, n: usize, scale: f64) -> CMatrix {
    let t = random_symplectic(rng, n, 0.5 * scale);
    let z = CMatrix::zeros(n, n);
    let d = blocks(n, &random_psd(rng, n, scale), &z, &z, &z);
    t.adjoint() * d * t
}

pub fn random_system(rng: &mut impl Rng, n: usize, horizon: usize) -> SymplecticSystem {
    let s: Vec<CMatrix> = (0..=horizon).map(|_| random_symplectic(rng, n, 0.5)).collect();
    let psi: Vec<CMatrix> = (0..=horizon).map(|_| random_weight(rng, n, 0.5)).collect();
    SymplecticSystem::from_generator(n, horizon, ToleranceConfig::default(), |k| (s[k].clone(), psi[k].clone()))
        .expect("valid dimensions")
}

/// Matrix Sturm–Liouville family `S = [[I, −P⁻¹], [−Q, I + Q P⁻¹]]`, `Ψ = diag(W, 0)`
/// with `P` Hermitian positive definite, `Q` Hermitian and `W` positive definite.
pub fn random_matrix_sl(rng: &mut impl Rng, n: usize, horizon: usize) -> SymplecticSystem {
    let i = eye(n);
    let z = CMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(horizon + 1);
    let mut psi = Vec::with_capacity(horizon + 1);
    for _ in 0..=horizon {
        let p = &i + random_psd(rng, n, 0.5);
        let q = random_hermitian(rng, n, 0.5);
        let w = &i * c(0.5, 0.0) + random_psd(rng, n, 0.5);
        let p_inv = p.try_inverse().expect("positive definite");
        s.push(blocks(n, &i, &(-&p_inv), &(-&q), &(&i + &q * &p_inv)));
        psi.push(blocks(n, &w, &z, &z, &z));
    }
    SymplecticSystem::from_generator(n, horizon, ToleranceConfig::default(), |k| (s[k].clone(), psi[k].clone()))
        .expect("valid dimensions")
}

pub fn free_sl(horizon: usize) -> SymplecticSystem {
    from_sturm_liouville(&vec![1.0; horizon + 2], &vec![0.0; horizon + 1], &vec![1.0; horizon + 1]).unwrap()
}

/// `S_k = I`, `Ψ_k = diag(1, 0)`.
pub fn identity_system(horizon: usize) -> SymplecticSystem {
    SymplecticSystem::constant(eye(2), real(2, 2, &[1.0, 0.0, 0.0, 0.0]), horizon, ToleranceConfig::default())
        .unwrap()
}

/// Free Sturm–Liouville coefficients with the weight switched off after `cutoff`.
pub fn limit_circle_toy(horizon: usize, cutoff: usize) -> SymplecticSystem {
    let w: Vec<f64> = (0..=horizon).map(|k| if k <= cutoff { 1.0 } else { 0.0 }).collect();
    from_sturm_liouville(&vec![1.0; horizon + 2], &vec![0.0; horizon + 1], &w).unwrap()
}

pub fn random_sequence(rng: &mut impl Rng, rows: usize, cols: usize, last: usize, lambda: Complex64) -> TrajectorySequence {
    TrajectorySequence::new(0, (0..=last).map(|_| random_matrix(rng, rows, cols, 1.0)).collect(), lambda).unwrap()
}

pub fn column(entries: &[Complex64]) -> CMatrix {
    CMatrix::from_column_slice(entries.len(), 1, entries)
}

pub fn vector(entries: &[Complex64]) -> CVector {
    CVector::from_column_slice(entries)
}

/// `S_k = T⁻¹ [[A_k, 0], [A_k^{-*} H_k, A_k^{-*}]] T`, `Ψ_k = T* diag(W_k, 0) T`
/// with one fixed symplectic `T`. Solutions starting in `T⁻¹ span{(0, I)}`
/// have zero weight for every `λ`, so `φ` has an `n`-dimensional kernel.
pub fn hidden_kernel_system(rng: &mut impl Rng, n: usize, horizon: usize) -> (SymplecticSystem, CMatrix) {
    let i = eye(n);
    let z = CMatrix::zeros(n, n);
    let t = random_symplectic(rng, n, 0.5);
    let t_inv = t.clone().try_inverse().expect("symplectic");
    let mut s = Vec::with_capacity(horizon + 1);
    let mut psi = Vec::with_capacity(horizon + 1);
    for _ in 0..=horizon {
        let a = &i + random_matrix(rng, n, n, 0.3);
        let a_inv_star = a.clone().try_inverse().expect("near identity").adjoint();
        let h = random_hermitian(rng, n, 0.5);
        let lower = blocks(n, &a, &z, &(&a_inv_star * &h), &a_inv_star);
        s.push(&t_inv * lower * &t);
        let w = &i * c(0.5, 0.0) + random_psd(rng, n, 0.5);
        psi.push(t.adjoint() * blocks(n, &w, &z, &z, &z) * &t);
    }
    let mut kernel = CMatrix::zeros(2 * n, n);
    kernel.view_mut((n, 0), (n, n)).copy_from(&i);
    let sys = SymplecticSystem::from_generator(n, horizon, ToleranceConfig::default(), |k| {
        (s[k].clone(), psi[k].clone())
    })
    .expect("valid dimensions");
    (sys, t_inv * kernel)
}
