//! Solution propagation in both index directions, fundamental matrices and
//! the Wronskian / Lagrange identity residuals.
//!
//! Residuals come in two flavours. `abs` is the raw Frobenius norm of the
//! defect. `rel` divides it by the magnitude of the products that enter the
//! identity (never less than 1), which is the meaningful quantity once
//! solutions grow geometrically.

use num_complex::Complex64;

use crate::error::{Result, SympError};
use crate::linalg::{self, frob, CMatrix};
use crate::system::{make_j, SymplecticSystem, TrajectorySequence};

/// Absolute and scale-normalized size of an identity defect.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residual {
    pub abs: f64,
    pub rel: f64,
}

impl Residual {
    pub fn new(abs: f64, scale: f64) -> Self {
        Self { abs, rel: abs / scale.max(1.0) }
    }

    pub fn max(self, other: Self) -> Self {
        Self { abs: self.abs.max(other.abs), rel: self.rel.max(other.rel) }
    }
}

/// `Φ(λ)` on `[0, N]` with `Φ_{k0} = C`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix {
    pub values: TrajectorySequence,
    pub lambda: Complex64,
    pub anchor_k0: usize,
    pub anchor_value: CMatrix,
}

impl FundamentalMatrix {
    pub fn at(&self, k: usize) -> Result<&CMatrix> {
        self.values.value(k)
    }
}

fn finite_or(index: usize, m: CMatrix) -> Result<CMatrix> {
    if linalg::is_finite(&m) {
        Ok(m)
    } else {
        Err(SympError::Propagation { index })
    }
}

/// The unique solution of `z_k = 𝕊_k(λ) z_{k+1}` with `z_{k0} = init`,
/// returned on the index range between `k0` and `target`.
pub fn transfer(
    sys: &SymplecticSystem,
    lambda: Complex64,
    init: &CMatrix,
    k0: usize,
    target: usize,
) -> Result<TrajectorySequence> {
    sys.check_index(k0)?;
    sys.check_index(target)?;
    if init.nrows() != sys.dim() || init.ncols() == 0 {
        return Err(SympError::DimensionMismatch(format!(
            "initial value is {:?}, expected {} rows and at least one column",
            init.shape(),
            sys.dim()
        )));
    }
    let init = finite_or(k0, init.clone())?;
    if target >= k0 {
        let mut values = Vec::with_capacity(target - k0 + 1);
        values.push(init);
        for k in k0..target {
            let next = sys.s_lambda_inverse(k, lambda)? * values.last().expect("nonempty");
            values.push(finite_or(k + 1, next)?);
        }
        TrajectorySequence::new(k0, values, lambda)
    } else {
        let mut values = Vec::with_capacity(k0 - target + 1);
        values.push(init);
        for k in (target..k0).rev() {
            let prev = sys.s_lambda(k, lambda)? * values.last().expect("nonempty");
            values.push(finite_or(k, prev)?);
        }
        values.reverse();
        TrajectorySequence::new(target, values, lambda)
    }
}

/// The solution with `z_{k0} = init` on the whole horizon `[0, N]`.
pub fn solve_on_horizon(
    sys: &SymplecticSystem,
    lambda: Complex64,
    init: &CMatrix,
    k0: usize,
) -> Result<TrajectorySequence> {
    let down = transfer(sys, lambda, init, k0, 0)?;
    let up = transfer(sys, lambda, init, k0, sys.horizon())?;
    let mut values = down.values;
    values.extend(up.values.into_iter().skip(1));
    TrajectorySequence::new(0, values, lambda)
}

/// `Φ(λ)` with `Φ_{k0}(λ) = C`, where `C` must be symplectic.
pub fn fundamental_matrix(
    sys: &SymplecticSystem,
    lambda: Complex64,
    k0: usize,
    c: &CMatrix,
) -> Result<FundamentalMatrix> {
    if c.shape() != (sys.dim(), sys.dim()) {
        return Err(SympError::DimensionMismatch(format!(
            "anchor is {:?}, expected {}x{}",
            c.shape(),
            sys.dim(),
            sys.dim()
        )));
    }
    let j = sys.j();
    let defect = frob(&(c.adjoint() * j * c - j));
    if defect > sys.tolerances().structural_tol * frob(c).powi(2).max(1.0) {
        return Err(SympError::Precondition(format!("anchor is not symplectic (C*JC - J = {defect:.3e})")));
    }
    let values = solve_on_horizon(sys, lambda, c, k0)?;
    Ok(FundamentalMatrix { values, lambda, anchor_k0: k0, anchor_value: c.clone() })
}

/// Defects of `Φ_k*(λ) J Φ_k(λ̄) = J` and `Φ_k(λ) J Φ_k*(λ̄) = J`, maximized
/// over the common index range.
pub fn fundamental_identity_residuals(
    phi: &FundamentalMatrix,
    phi_bar: &FundamentalMatrix,
) -> Result<(Residual, Residual)> {
    let rows = phi.values.rows();
    if rows != phi_bar.values.rows() || !rows.is_multiple_of(2) {
        return Err(SympError::DimensionMismatch("fundamental matrices of different size".into()));
    }
    let j = make_j(rows / 2)?;
    let lo = phi.values.first.max(phi_bar.values.first);
    let hi = phi.values.last().min(phi_bar.values.last());
    let mut left = Residual::default();
    let mut right = Residual::default();
    for k in lo..=hi {
        let a = phi.at(k)?;
        let b = phi_bar.at(k)?;
        let scale = frob(a) * frob(b);
        left = left.max(Residual::new(frob(&(a.adjoint() * &j * b - &j)), scale));
        right = right.max(Residual::new(frob(&(a * &j * b.adjoint() - &j)), scale));
    }
    Ok((left, right))
}

/// `L(z)_k = J(z_k − S_k z_{k+1})` for every `k` with both `z_k` and
/// `z_{k+1}` available.
pub fn apply_l(sys: &SymplecticSystem, z: &TrajectorySequence) -> Result<TrajectorySequence> {
    if z.len() < 2 {
        return Err(SympError::InvalidDimension("L needs at least two consecutive values".into()));
    }
    let j = sys.j();
    let values = (z.first..z.last())
        .map(|k| Ok(j * (z.value(k)? - sys.s(k)? * z.value(k + 1)?)))
        .collect::<Result<Vec<_>>>()?;
    TrajectorySequence::new(z.first, values, z.lambda)
}

/// Forward solution of `z_k = 𝕊_k(λ) z_{k+1} − JΨ_k f_k` on `[0, N]` with
/// `z_0 = z0`. `f` must cover `[0, N−1]`.
pub fn solve_ivp_nonhom(
    sys: &SymplecticSystem,
    lambda: Complex64,
    f: &TrajectorySequence,
    z0: &CMatrix,
) -> Result<TrajectorySequence> {
    let horizon = sys.horizon();
    if f.first != 0 || f.last() + 1 < horizon {
        return Err(SympError::DimensionMismatch(format!(
            "nonhomogeneity must cover [0, {}], got [{}, {}]",
            horizon - 1,
            f.first,
            f.last()
        )));
    }
    if z0.nrows() != sys.dim() || f.rows() != sys.dim() || f.cols() != z0.ncols() {
        return Err(SympError::DimensionMismatch(format!(
            "initial value {:?} and nonhomogeneity {}x{} incompatible with dimension {}",
            z0.shape(),
            f.rows(),
            f.cols(),
            sys.dim()
        )));
    }
    let j = sys.j();
    let eye = linalg::identity(sys.dim());
    let mut values = Vec::with_capacity(horizon + 1);
    values.push(finite_or(0, z0.clone())?);
    for k in 0..horizon {
        let s = sys.s(k)?;
        let jpsi = j * sys.psi(k)?;
        let s_inv = -(j * s.adjoint() * j);
        let zk = values.last().expect("nonempty");
        let next = s_inv * ((&eye + &jpsi * lambda) * zk + &jpsi * f.value(k)?);
        values.push(finite_or(k + 1, next)?);
    }
    TrajectorySequence::new(0, values, lambda)
}

/// Largest defect of `z_k*(λ) J u_k(λ̄) = z_0*(λ) J u_0(λ̄)` over the common
/// range, measured against the first common index.
pub fn wronskian_residual(z: &TrajectorySequence, u: &TrajectorySequence) -> Result<Residual> {
    if z.rows() != u.rows() || !z.rows().is_multiple_of(2) || z.first != u.first || z.last() != u.last() {
        return Err(SympError::DimensionMismatch(format!(
            "trajectories on [{}, {}] and [{}, {}] with {} / {} rows",
            z.first,
            z.last(),
            u.first,
            u.last(),
            z.rows(),
            u.rows()
        )));
    }
    let j = make_j(z.rows() / 2)?;
    let z0 = z.value(z.first)?;
    let u0 = u.value(u.first)?;
    let w0 = z0.adjoint() * &j * u0;
    let base = frob(z0) * frob(u0);
    let mut out = Residual::default();
    for k in z.first..=z.last() {
        let zk = z.value(k)?;
        let uk = u.value(k)?;
        let wk = zk.adjoint() * &j * uk;
        out = out.max(Residual::new(frob(&(wk - &w0)), base.max(frob(zk) * frob(uk))));
    }
    Ok(out)
}

/// Per-step and summed defects of the extended Lagrange identity.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeReport {
    /// Defect of `Δ[z_k* J u_k]` against its right-hand side at each `k`.
    pub per_k: Vec<Residual>,
    /// Defect of `z_{k+1}* J u_{k+1} − z_0* J u_0` against the partial sums.
    pub cumulative: Vec<Residual>,
    pub max_abs: f64,
    pub max_rel: f64,
}

/// Checks
///
/// ```text
/// Δ[z_k*(λ) J u_k(ν)] = (λ̄ − ν) z_k* Ψ_k u_k + f_k* Ψ_k u_k − z_k* Ψ_k g_k
/// ```
///
/// for `z` solving the system at `λ = z.lambda` with nonhomogeneity `f` and `u`
/// solving it at `ν = u.lambda` with `g`, together with its summed form.
pub fn lagrange_residual(
    sys: &SymplecticSystem,
    z: &TrajectorySequence,
    f: &TrajectorySequence,
    u: &TrajectorySequence,
    g: &TrajectorySequence,
) -> Result<LagrangeReport> {
    if z.first != u.first || z.last() != u.last() || z.len() < 2 {
        return Err(SympError::DimensionMismatch("solutions must share an index range of length >= 2".into()));
    }
    let j = sys.j();
    let coef = z.lambda.conj() - u.lambda;
    let mut per_k = Vec::with_capacity(z.len() - 1);
    let mut cumulative = Vec::with_capacity(z.len() - 1);
    let mut rhs_sum = CMatrix::zeros(z.cols(), u.cols());
    let mut scale_sum = 0.0;
    let w_first = z.value(z.first)?.adjoint() * j * u.value(u.first)?;
    let first_scale = frob(z.value(z.first)?) * frob(u.value(u.first)?);
    for k in z.first..z.last() {
        let (zk, zk1) = (z.value(k)?, z.value(k + 1)?);
        let (uk, uk1) = (u.value(k)?, u.value(k + 1)?);
        let (fk, gk) = (f.value(k)?, g.value(k)?);
        let psi = sys.psi(k)?;
        let w_next = zk1.adjoint() * j * uk1;
        let lhs = &w_next - zk.adjoint() * j * uk;
        let rhs = zk.adjoint() * psi * uk * coef + fk.adjoint() * psi * uk - zk.adjoint() * psi * gk;
        let pn = frob(psi);
        let scale = frob(zk1) * frob(uk1)
            + frob(zk) * frob(uk)
            + pn * (coef.norm() * frob(zk) * frob(uk) + frob(fk) * frob(uk) + frob(zk) * frob(gk));
        per_k.push(Residual::new(frob(&(lhs - &rhs)), scale));
        rhs_sum += rhs;
        scale_sum += scale;
        let total = &w_next - &w_first;
        cumulative.push(Residual::new(frob(&(total - &rhs_sum)), scale_sum + first_scale));
    }
    let all = per_k.iter().chain(&cumulative);
    let max_abs = all.clone().map(|r| r.abs).fold(0.0, f64::max);
    let max_rel = all.map(|r| r.rel).fold(0.0, f64::max);
    Ok(LagrangeReport { per_k, cumulative, max_abs, max_rel })
}
