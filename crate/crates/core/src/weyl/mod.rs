//! Weyl solutions and disks, a boundary-condition approximation of the
//! half-line `M(λ)`, Green functions and the count of square-summable
//! solutions.
//!
//! Solutions that decay in `k` cannot be obtained by forward propagation:
//! the growing mode swamps them after a few dozen steps. Every decaying
//! object here is therefore built from a backward sweep that starts at a
//! boundary condition `β z_N = 0` and re-orthonormalizes at each step.

mod green;
mod summable;

pub use green::{GreenProperties, GreenTable, SolveReport};
pub use summable::{count_square_summable, PairClassification, SummabilityEstimate};

use num_complex::Complex64;

use crate::error::{Result, SympError};
use crate::linalg::{self, frob, CMatrix, ONE};
use crate::propagation::{fundamental_matrix, transfer, FundamentalMatrix};
use crate::system::{lambda_sign, SymplecticSystem, TrajectorySequence};

/// An `n × 2n` matrix with `αα* = I` and `αJα* = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatrix {
    value: CMatrix,
}

impl AlphaMatrix {
    pub fn new(value: CMatrix, tol: f64) -> Result<Self> {
        let n = value.nrows();
        if n == 0 || value.ncols() != 2 * n {
            return Err(SympError::DimensionMismatch(format!(
                "boundary matrix must be n x 2n, got {:?}",
                value.shape()
            )));
        }
        let j = crate::system::make_j(n)?;
        let unit = frob(&(&value * value.adjoint() - linalg::identity(n)));
        let iso = frob(&(&value * &j * value.adjoint()));
        if unit > tol || iso > tol {
            return Err(SympError::Precondition(format!(
                "boundary matrix outside the admissible set (αα* - I = {unit:.3e}, αJα* = {iso:.3e})"
            )));
        }
        Ok(Self { value })
    }

    /// `(I_n, 0)`.
    pub fn first_block(n: usize) -> Self {
        let mut value = CMatrix::zeros(n, 2 * n);
        for i in 0..n {
            value[(i, i)] = ONE;
        }
        Self { value }
    }

    /// `(0, I_n)`.
    pub fn second_block(n: usize) -> Self {
        let mut value = CMatrix::zeros(n, 2 * n);
        for i in 0..n {
            value[(i, n + i)] = ONE;
        }
        Self { value }
    }

    pub fn value(&self) -> &CMatrix {
        &self.value
    }

    pub fn n(&self) -> usize {
        self.value.nrows()
    }

    /// `Φ_0(λ, α) = (α*, −Jα*)`.
    pub fn initial_frame(&self) -> CMatrix {
        let n = self.n();
        let j = crate::system::make_j(n).expect("n >= 1");
        let a_star = self.value.adjoint();
        let mut frame = CMatrix::zeros(2 * n, 2 * n);
        frame.columns_mut(0, n).copy_from(&a_star);
        frame.columns_mut(n, n).copy_from(&(-(&j * &a_star)));
        frame
    }
}

/// `Φ(λ, α)` split into its left and right column blocks `Z` and `Z̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalFundamental {
    pub phi: FundamentalMatrix,
    pub z: TrajectorySequence,
    pub z_tilde: TrajectorySequence,
}

fn check_alpha(sys: &SymplecticSystem, alpha: &AlphaMatrix) -> Result<()> {
    if alpha.n() != sys.n() {
        return Err(SympError::DimensionMismatch(format!(
            "boundary matrix has n = {}, system has n = {}",
            alpha.n(),
            sys.n()
        )));
    }
    Ok(())
}

/// Fundamental matrix normalized by `Φ_0(λ, α) = (α*, −Jα*)`.
pub fn natural_fundamental(
    sys: &SymplecticSystem,
    lambda: Complex64,
    alpha: &AlphaMatrix,
) -> Result<NaturalFundamental> {
    check_alpha(sys, alpha)?;
    let phi = fundamental_matrix(sys, lambda, 0, &alpha.initial_frame())?;
    let n = sys.n();
    let split = |start: usize| TrajectorySequence {
        first: 0,
        values: phi.values.values.iter().map(|v| v.columns(start, n).into_owned()).collect(),
        lambda,
    };
    let z = split(0);
    let z_tilde = split(n);
    Ok(NaturalFundamental { phi, z, z_tilde })
}

/// `X_0 = α* − Jα* M`, the value at 0 of `Φ(λ, α) (I, M*)*`.
fn weyl_initial(sys: &SymplecticSystem, alpha: &AlphaMatrix, m: &CMatrix) -> Result<CMatrix> {
    check_alpha(sys, alpha)?;
    if m.shape() != (sys.n(), sys.n()) {
        return Err(SympError::DimensionMismatch(format!("M is {:?}, expected {}x{}", m.shape(), sys.n(), sys.n())));
    }
    let a_star = alpha.value().adjoint();
    Ok(&a_star - sys.j() * &a_star * m)
}

/// The Weyl solution `X(λ) = Z(λ) + Z̃(λ) M` on `[0, N]`.
pub fn weyl_solution(
    sys: &SymplecticSystem,
    lambda: Complex64,
    alpha: &AlphaMatrix,
    m: &CMatrix,
) -> Result<TrajectorySequence> {
    let x0 = weyl_initial(sys, alpha, m)?;
    transfer(sys, lambda, &x0, 0, sys.horizon())
}

/// `E(X) = iδ X* J X` for a single value.
pub(crate) fn indicator_of(j: &CMatrix, x: &CMatrix, delta: f64) -> CMatrix {
    let e = x.adjoint() * j * x * Complex64::new(0.0, delta);
    linalg::hermitian_part(&e)
}

/// `E_k(M) = iδ(λ) X_k* J X_k`; `M ∈ D_k(λ)` iff this is negative semi-definite.
pub fn disk_indicator(
    sys: &SymplecticSystem,
    k: usize,
    lambda: Complex64,
    alpha: &AlphaMatrix,
    m: &CMatrix,
) -> Result<CMatrix> {
    let delta = lambda_sign(lambda)?;
    sys.check_index(k)?;
    let x0 = weyl_initial(sys, alpha, m)?;
    let x = transfer(sys, lambda, &x0, 0, k)?;
    Ok(indicator_of(sys.j(), x.value(k)?, delta))
}

/// A Weyl solution together with its disk indicators along the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylState {
    pub alpha: AlphaMatrix,
    pub lambda: Complex64,
    pub m: CMatrix,
    pub x: TrajectorySequence,
    pub ek_trace: Vec<CMatrix>,
    pub delta: f64,
}

impl WeylState {
    pub fn new(sys: &SymplecticSystem, lambda: Complex64, alpha: &AlphaMatrix, m: &CMatrix) -> Result<Self> {
        let delta = lambda_sign(lambda)?;
        let x = weyl_solution(sys, lambda, alpha, m)?;
        let ek_trace = x.values.iter().map(|xk| indicator_of(sys.j(), xk, delta)).collect();
        Ok(Self { alpha: alpha.clone(), lambda, m: m.clone(), x, ek_trace, delta })
    }

    /// Largest eigenvalue of `E_k(M)` for each `k`.
    pub fn max_eigenvalues(&self) -> Vec<f64> {
        self.ek_trace.iter().map(linalg::max_eigenvalue).collect()
    }

    /// `max_k ‖X_k − Φ_k(λ, α)(I, M*)*‖_F / max(1, ‖X_k‖_F)`.
    pub fn reconstruction_residual(&self, fundamental: &NaturalFundamental) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in self.x.first..=self.x.last() {
            let xk = self.x.value(k)?;
            let rebuilt = fundamental.z.value(k)? + fundamental.z_tilde.value(k)? * &self.m;
            worst = worst.max(frob(&(xk - rebuilt)) / frob(xk).max(1.0));
        }
        Ok(worst)
    }
}

/// Orthonormal frames `Q_k` (2n × n) of the solution with `z_{n_b} ∈ span(Jβ*)`,
/// linked by `𝕊_k(λ) Q_{k+1} = Q_k R_k` with `R_k` upper triangular.
#[derive(Debug, Clone)]
pub(crate) struct BackwardSweep {
    pub q: Vec<CMatrix>,
    pub r: Vec<CMatrix>,
}

impl BackwardSweep {
    pub fn new(sys: &SymplecticSystem, lambda: Complex64, beta: &AlphaMatrix, n_b: usize) -> Result<Self> {
        check_alpha(sys, beta)?;
        sys.check_index(n_b)?;
        let start = sys.j() * beta.value().adjoint();
        let mut q = vec![CMatrix::zeros(0, 0); n_b + 1];
        let mut r = vec![CMatrix::zeros(0, 0); n_b];
        q[n_b] = start;
        for k in (0..n_b).rev() {
            let y = sys.s_lambda(k, lambda)? * &q[k + 1];
            if !linalg::is_finite(&y) {
                return Err(SympError::Propagation { index: k });
            }
            let qr = y.qr();
            q[k] = qr.q();
            r[k] = qr.r();
        }
        Ok(Self { q, r })
    }

    /// The solution `X⁺` with `α X⁺_0 = I`, evaluated on `[0, n_b]` through
    /// the coefficient recursion `W_{k+1} = R_k⁻¹ W_k`. Fails when `α Q_0`
    /// has a singular value at or below `rank_tol`, i.e. when `λ` is
    /// numerically an eigenvalue of the two-point problem.
    pub fn normalized_by(
        &self,
        alpha: &AlphaMatrix,
        lambda: Complex64,
        n_b: usize,
        rank_tol: f64,
    ) -> Result<TrajectorySequence> {
        let a_q0 = alpha.value() * &self.q[0];
        if linalg::singular_values(&a_q0).iter().fold(f64::INFINITY, |a, &b| a.min(b)) <= rank_tol {
            return Err(SympError::BoundaryCondition(n_b));
        }
        let mut w = a_q0.try_inverse().ok_or(SympError::BoundaryCondition(n_b))?;
        if !linalg::is_finite(&w) {
            return Err(SympError::BoundaryCondition(n_b));
        }
        let mut values = Vec::with_capacity(self.q.len());
        values.push(&self.q[0] * &w);
        for k in 0..self.r.len() {
            w = self.r[k].solve_upper_triangular(&w).ok_or(SympError::Propagation { index: k + 1 })?;
            values.push(&self.q[k + 1] * &w);
        }
        TrajectorySequence::new(0, values, lambda)
    }
}

/// `M_N = α J X⁺_0`, where `X⁺` satisfies `α X⁺_0 = I` and `β X⁺_N = 0`,
/// computed from the backward sweep.
pub fn boundary_m(
    sys: &SymplecticSystem,
    lambda: Complex64,
    alpha: &AlphaMatrix,
    beta: &AlphaMatrix,
    n_b: usize,
) -> Result<(CMatrix, TrajectorySequence)> {
    check_alpha(sys, alpha)?;
    let sweep = BackwardSweep::new(sys, lambda, beta, n_b)?;
    let x_plus = sweep.normalized_by(alpha, lambda, n_b, sys.tolerances().rank_tol)?;
    let m = alpha.value() * sys.j() * x_plus.value(0)?;
    Ok((m, x_plus))
}

/// `M_N = −(β Z̃_N)⁻¹ (β Z_N)` from the forward natural fundamental matrix.
/// Serves as an independent route for moderate `N`; loses accuracy once the
/// columns of `Φ` become nearly parallel.
pub fn boundary_m_forward(
    sys: &SymplecticSystem,
    lambda: Complex64,
    alpha: &AlphaMatrix,
    beta: &AlphaMatrix,
    n_b: usize,
) -> Result<CMatrix> {
    check_alpha(sys, beta)?;
    sys.check_index(n_b)?;
    let nf = natural_fundamental(sys, lambda, alpha)?;
    let bz = beta.value() * nf.z.value(n_b)?;
    let bzt = beta.value() * nf.z_tilde.value(n_b)?;
    let inv = bzt.try_inverse().ok_or(SympError::BoundaryCondition(n_b))?;
    Ok(-(inv * bz))
}

/// One step of the `M_N` approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct MIterate {
    pub n: usize,
    pub m: Option<CMatrix>,
    /// `‖M_N − M_{N'}‖_F` against the previous successful iterate.
    pub drift: Option<f64>,
    /// Largest eigenvalue of `E_N(M_N)` relative to `‖X_N‖²`.
    pub e_n_max_eigenvalue: f64,
    /// Smallest eigenvalue of `δ Im M_N`.
    pub nevanlinna_min: f64,
    pub in_disk: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineEstimate {
    pub lambda: Complex64,
    pub m_plus: CMatrix,
    pub trace: Vec<MIterate>,
}

impl HalfLineEstimate {
    /// Drift between the last two successful iterates.
    pub fn last_drift(&self) -> Option<f64> {
        self.trace.iter().rev().find_map(|it| it.drift)
    }
}

/// Approximates the half-line `M(λ)` by `M_N` for every `N` in `n_list`.
pub fn approx_half_line_m(
    sys: &SymplecticSystem,
    lambda: Complex64,
    alpha: &AlphaMatrix,
    beta: &AlphaMatrix,
    n_list: &[usize],
) -> Result<HalfLineEstimate> {
    let delta = lambda_sign(lambda)?;
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SympError::Precondition("N list must be nonempty and strictly increasing".into()));
    }
    let psd_tol = sys.tolerances().psd_tol;
    let mut trace = Vec::with_capacity(n_list.len());
    let mut previous: Option<CMatrix> = None;
    for &n in n_list {
        match boundary_m(sys, lambda, alpha, beta, n) {
            Ok((m, x_plus)) => {
                let xn = x_plus.value(n)?;
                let e_max = linalg::max_eigenvalue(&indicator_of(sys.j(), xn, delta)) / frob(xn).powi(2).max(1.0);
                let im_part = (&m - m.adjoint()) * Complex64::new(0.0, -0.5 * delta);
                let nevanlinna_min = linalg::min_eigenvalue(&im_part);
                let drift = previous.as_ref().map(|p| frob(&(&m - p)));
                trace.push(MIterate {
                    n,
                    m: Some(m.clone()),
                    drift,
                    e_n_max_eigenvalue: e_max,
                    nevanlinna_min,
                    in_disk: e_max <= psd_tol,
                    failure: None,
                });
                previous = Some(m);
            }
            Err(err @ (SympError::BoundaryCondition(_) | SympError::Propagation { .. })) => trace.push(MIterate {
                n,
                m: None,
                drift: None,
                e_n_max_eigenvalue: f64::NAN,
                nevanlinna_min: f64::NAN,
                in_disk: false,
                failure: Some(err.to_string()),
            }),
            Err(err) => return Err(err),
        }
    }
    let m_plus = previous.ok_or(SympError::BoundaryCondition(*n_list.last().expect("nonempty")))?;
    Ok(HalfLineEstimate { lambda, m_plus, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity, real_matrix, ZERO};
    use crate::system::{from_sturm_liouville, ToleranceConfig};

    fn zero_matrix(n: usize) -> CMatrix {
        CMatrix::from_element(n, n, ZERO)
    }

    fn free_sl(horizon: usize) -> SymplecticSystem {
        from_sturm_liouville(&vec![1.0; horizon + 2], &vec![0.0; horizon + 1], &vec![1.0; horizon + 1])
            .unwrap()
    }

    #[test]
    fn alpha_validation() {
        let a = AlphaMatrix::first_block(1);
        assert_eq!(a.initial_frame(), identity(2));
        let frame = AlphaMatrix::second_block(2).initial_frame();
        let j = crate::system::make_j(2).unwrap();
        assert!(frob(&(frame.adjoint() * &j * &frame - &j)) < 1e-15);
        // Orthonormal rows, but e_1 J e_3* = 1.
        let bad = real_matrix(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(AlphaMatrix::new(bad, 1e-12).is_err());
        let rotated = real_matrix(1, 2, &[0.6, 0.8]);
        assert!(AlphaMatrix::new(rotated, 1e-12).is_ok());
    }

    #[test]
    fn weyl_solution_basics() {
        let sys = free_sl(30);
        let lam = c(0.2, 1.0);
        let alpha = AlphaMatrix::new(real_matrix(1, 2, &[0.6, 0.8]), 1e-12).unwrap();
        let m = CMatrix::from_element(1, 1, c(0.3, -0.4));
        let x = weyl_solution(&sys, lam, &alpha, &m).unwrap();
        assert!((alpha.value() * x.value(0).unwrap() - identity(1)).norm() < 1e-15);
        let nf = natural_fundamental(&sys, lam, &alpha).unwrap();
        let zero = weyl_solution(&sys, lam, &alpha, &zero_matrix(1)).unwrap();
        assert!(zero.max_distance(&nf.z) < 1e-12 * frob(nf.z.value(30).unwrap()));
        let state = WeylState::new(&sys, lam, &alpha, &m).unwrap();
        assert!(state.reconstruction_residual(&nf).unwrap() < 1e-12);
    }

    #[test]
    fn real_lambda_rejected() {
        let sys = free_sl(5);
        let a = AlphaMatrix::first_block(1);
        assert!(matches!(
            disk_indicator(&sys, 1, c(1.0, 0.0), &a, &zero_matrix(1)),
            Err(SympError::RealLambda(_))
        ));
    }

    #[test]
    fn zero_weight_indicator_is_constant() {
        let psi = CMatrix::zeros(2, 2);
        let s = real_matrix(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let sys = SymplecticSystem::constant(s, psi, 10, ToleranceConfig::default()).unwrap();
        let state = WeylState::new(&sys, c(0.0, 1.0), &AlphaMatrix::first_block(1), &zero_matrix(1)).unwrap();
        for e in &state.ek_trace {
            assert!(frob(&(e - &state.ek_trace[0])) < 1e-13);
        }
    }

    #[test]
    fn backward_and_forward_routes_agree() {
        let sys = free_sl(20);
        let lam = c(0.5, 0.7);
        let alpha = AlphaMatrix::first_block(1);
        let beta = AlphaMatrix::first_block(1);
        let (m_back, _) = boundary_m(&sys, lam, &alpha, &beta, 20).unwrap();
        let m_fwd = boundary_m_forward(&sys, lam, &alpha, &beta, 20).unwrap();
        assert!(frob(&(&m_back - &m_fwd)) < 1e-10 * frob(&m_back).max(1.0));
    }
}
