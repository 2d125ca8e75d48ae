//! Definiteness through the Gram matrix `φ(λ, I) = Σ_{k∈I} Φ_k*(λ) Ψ_k Φ_k(λ)`
//! of the fundamental system normalized at the left end of `I`.

use std::ops::RangeInclusive;

use num_complex::Complex64;

use crate::error::{Result, SympError};
use crate::linalg::{self, frob, CMatrix, CVector};
use crate::propagation::transfer;
use crate::system::SymplecticSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub value: CMatrix,
    pub interval: (usize, usize),
    pub lambda: Complex64,
    pub rank: usize,
    /// Orthonormal columns spanning the numerical kernel.
    pub kernel_basis: CMatrix,
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
}

/// Triangular `R` with `R* R = Σ Φ_k* Ψ_k Φ_k`, accumulated from the rows of
/// `Ψ_k^{1/2} Φ_k`. Rank decisions use the singular values of `R` rather than
/// the eigenvalues of the sum, which are their squares.
#[derive(Debug, Clone)]
pub(crate) struct GramFactor {
    r: CMatrix,
    rank_tol: f64,
}

impl GramFactor {
    pub fn new(dim: usize, rank_tol: f64) -> Self {
        Self { r: CMatrix::zeros(0, dim), rank_tol }
    }

    pub fn push(&mut self, psi: &CMatrix, phi: &CMatrix) {
        let rows = linalg::psd_root(psi, self.rank_tol) * phi;
        let mut stacked = CMatrix::zeros(self.r.nrows() + rows.nrows(), rows.ncols());
        stacked.rows_mut(0, self.r.nrows()).copy_from(&self.r);
        stacked.rows_mut(self.r.nrows(), rows.nrows()).copy_from(&rows);
        self.r = stacked.qr().r();
    }

    pub fn kernel(&self) -> CMatrix {
        linalg::null_space(&self.r, self.rank_tol)
    }

    /// Orthonormal basis of `Ran φ = Ran R*`.
    pub fn range(&self) -> CMatrix {
        linalg::range_basis(&self.r.adjoint(), self.rank_tol)
    }
}

impl GramMatrix {

    /// Ratio of the largest eigenvalue to the smallest one counted in the
    /// rank; infinite when the rank is zero.
    pub fn condition(&self) -> f64 {
        let kept = &self.eigenvalues[self.eigenvalues.len() - self.rank..];
        match (kept.first(), kept.last()) {
            (Some(lo), Some(hi)) if *lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Orthonormal basis of `Ran φ`.
    pub fn range_basis(&self) -> CMatrix {
        let (_, vectors) = linalg::hermitian_eigen(&self.value);
        let dim = self.value.nrows();
        vectors.columns(dim - self.rank, self.rank).into_owned()
    }
}

/// Gram matrix over `interval` of the fundamental matrix with `Φ_{k0}(λ) = I`.
pub fn gram_phi(
    sys: &SymplecticSystem,
    lambda: Complex64,
    interval: RangeInclusive<usize>,
    k0: usize,
) -> Result<GramMatrix> {
    let (lo, hi) = (*interval.start(), *interval.end());
    if lo > hi {
        return Err(SympError::Precondition(format!("empty interval [{lo}, {hi}]")));
    }
    sys.check_index(hi)?;
    if !(lo..=hi).contains(&k0) {
        return Err(SympError::Precondition(format!("anchor {k0} outside [{lo}, {hi}]")));
    }
    let eye = linalg::identity(sys.dim());
    let down = transfer(sys, lambda, &eye, k0, lo)?;
    let up = transfer(sys, lambda, &eye, k0, hi)?;
    let mut value = CMatrix::zeros(sys.dim(), sys.dim());
    let mut factor = GramFactor::new(sys.dim(), sys.tolerances().rank_tol);
    for k in lo..=hi {
        let phi = if k <= k0 { down.value(k)? } else { up.value(k)? };
        value += phi.adjoint() * sys.psi(k)? * phi;
        factor.push(sys.psi(k)?, phi);
    }
    let value = linalg::hermitian_part(&value);
    let (eigenvalues, _) = linalg::hermitian_eigen(&value);
    let kernel_basis = factor.kernel();
    let rank = sys.dim() - kernel_basis.ncols();
    Ok(GramMatrix { value, interval: (lo, hi), lambda, rank, kernel_basis, eigenvalues })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelIndependenceReport {
    pub lambdas: Vec<Complex64>,
    pub ranks: Vec<usize>,
    /// Largest principal angle between the kernels at the first sample and
    /// at every other sample.
    pub max_angle: f64,
}

impl KernelIndependenceReport {
    pub fn consistent(&self, angle_tol: f64) -> bool {
        self.ranks.windows(2).all(|w| w[0] == w[1]) && self.max_angle <= angle_tol
    }
}

/// Compares `Ker φ(λ_i, I)` across the samples.
pub fn kernel_lambda_independence(
    sys: &SymplecticSystem,
    interval: RangeInclusive<usize>,
    lambdas: &[Complex64],
) -> Result<KernelIndependenceReport> {
    if lambdas.len() < 2 {
        return Err(SympError::Precondition("need at least two lambda samples".into()));
    }
    let k0 = *interval.start();
    let grams = lambdas
        .iter()
        .map(|&lam| gram_phi(sys, lam, interval.clone(), k0))
        .collect::<Result<Vec<_>>>()?;
    let reference = &grams[0].kernel_basis;
    let max_angle = grams[1..]
        .iter()
        .map(|g| linalg::max_principal_angle(reference, &g.kernel_basis))
        .fold(0.0, f64::max);
    Ok(KernelIndependenceReport {
        lambdas: lambdas.to_vec(),
        ranks: grams.iter().map(|g| g.rank).collect(),
        max_angle,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalRankInterval {
    /// The shortest prefix `[0, end]` attaining the rank of `[0, N_max]`.
    pub end: usize,
    pub rank: usize,
    /// `rank φ(0, [0, m])` for `m = 0, …, N_max`.
    pub prefix_ranks: Vec<usize>,
    pub monotone: bool,
}

/// Scans prefixes `[0, m]`, `m ≤ n_max`, at `λ = 0`.
pub fn maximal_rank_interval(sys: &SymplecticSystem, n_max: usize) -> Result<MaximalRankInterval> {
    sys.check_index(n_max)?;
    let eye = linalg::identity(sys.dim());
    let phi = transfer(sys, Complex64::new(0.0, 0.0), &eye, 0, n_max)?;
    let rank_tol = sys.tolerances().rank_tol;
    let mut factor = GramFactor::new(sys.dim(), rank_tol);
    let mut prefix_ranks = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max {
        factor.push(sys.psi(k)?, phi.value(k)?);
        prefix_ranks.push(sys.dim() - factor.kernel().ncols());
    }
    let monotone = prefix_ranks.windows(2).all(|w| w[0] <= w[1]);
    let rank = *prefix_ranks.last().expect("nonempty");
    let end = prefix_ranks.iter().position(|&r| r == rank).expect("rank attained");
    Ok(MaximalRankInterval { end, rank, prefix_ranks, monotone })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// Eigenvalues of `φ`, all above the rank cutoff.
    FullRank { eigenvalues: Vec<f64> },
    /// A unit vector `ξ` with `‖Φ(λ) ξ‖_Ψ` numerically zero.
    Kernel { xi: CVector, semi_norm: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefinitenessVerdict {
    pub definite: bool,
    pub gram: GramMatrix,
    pub certificate: Certificate,
}

/// The system is definite on `interval` iff `rank φ(λ, interval) = 2n`.
pub fn is_definite(
    sys: &SymplecticSystem,
    interval: RangeInclusive<usize>,
    lambda_probe: Complex64,
) -> Result<DefinitenessVerdict> {
    let k0 = *interval.start();
    let gram = gram_phi(sys, lambda_probe, interval, k0)?;
    let definite = gram.rank == sys.dim();
    let certificate = if definite {
        Certificate::FullRank { eigenvalues: gram.eigenvalues.clone() }
    } else {
        let mut xi: CVector = gram.kernel_basis.column(0).into_owned();
        linalg::normalize_phase(&mut xi);
        xi /= Complex64::new(xi.norm(), 0.0);
        let semi_norm = (xi.adjoint() * &gram.value * &xi)[(0, 0)].re.max(0.0).sqrt();
        Certificate::Kernel { xi, semi_norm }
    };
    Ok(DefinitenessVerdict { definite, gram, certificate })
}

/// Sufficient condition for definiteness on `[l−1, l]` when
/// `Ψ_k = diag(W_k, 0)`: `B_{l−1}` invertible and `W_{l−1}`, `W_l` positive
/// definite, where `S_k = [[A_k, B_k], [C_k, D_k]]`.
pub fn block_sufficient_condition(sys: &SymplecticSystem, l: usize) -> Result<bool> {
    if l == 0 {
        return Err(SympError::Precondition("index l must be at least 1".into()));
    }
    sys.check_index(l)?;
    let tol = sys.tolerances();
    let prev = sys.block_form(l - 1)?;
    let cur = sys.block_form(l)?;
    let sv = linalg::singular_values(&prev.b);
    let b_invertible = linalg::numerical_rank(&sv, tol.rank_tol) == sys.n();
    let positive = |w: &CMatrix| linalg::min_eigenvalue(w) > tol.psd_tol * frob(w).max(1.0);
    Ok(b_invertible && positive(&prev.w) && positive(&cur.w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity, real_matrix, ONE, ZERO};
    use crate::system::{from_sturm_liouville, ToleranceConfig};

    fn sl(p: f64, q: f64, w: f64, horizon: usize) -> SymplecticSystem {
        from_sturm_liouville(&vec![p; horizon + 2], &vec![q; horizon + 1], &vec![w; horizon + 1]).unwrap()
    }

    fn identity_weight(horizon: usize) -> SymplecticSystem {
        let psi = real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        SymplecticSystem::constant(identity(2), psi, horizon, ToleranceConfig::default()).unwrap()
    }

    #[test]
    fn free_sl_gram_on_three_points() {
        // Φ_0 = I, Φ_1 = [[1,1],[0,1]], Φ_2 = [[1,2],[0,1]] at λ = 0; Ψ = diag(1,0).
        let g = gram_phi(&sl(1.0, 0.0, 1.0, 5), ZERO, 0..=2, 0).unwrap();
        assert!(frob(&(&g.value - real_matrix(2, 2, &[3.0, 3.0, 3.0, 5.0]))) < 1e-14);
        assert_eq!(g.rank, 2);
        assert_eq!(g.kernel_basis.ncols(), 0);
    }

    #[test]
    fn identity_weight_gram_closed_form() {
        let sys = identity_weight(10);
        for m in [0usize, 3, 10] {
            for lam in [ZERO, c(0.0, 1.0), c(-2.0, 0.5)] {
                let g = gram_phi(&sys, lam, 0..=m, 0).unwrap();
                let expect = real_matrix(2, 2, &[(m + 1) as f64, 0.0, 0.0, 0.0]);
                assert!(frob(&(&g.value - expect)) < 1e-12 * (m + 1) as f64);
                assert_eq!(g.rank, 1);
            }
        }
    }

    #[test]
    fn zero_weight_has_rank_zero() {
        let sys = sl(1.0, 0.0, 0.0, 6);
        let g = gram_phi(&sys, c(0.0, 1.0), 0..=6, 0).unwrap();
        assert_eq!(g.rank, 0);
        assert_eq!(g.kernel_basis.ncols(), 2);
        let mri = maximal_rank_interval(&sys, 6).unwrap();
        assert_eq!((mri.end, mri.rank), (0, 0));
        assert!(!is_definite(&sys, 0..=6, c(0.0, 1.0)).unwrap().definite);
    }

    #[test]
    fn kernel_independence_cases() {
        let lams = [ZERO, c(0.0, 1.0), c(1.0, 2.0)];
        let r = kernel_lambda_independence(&sl(1.0, 0.0, 1.0, 6), 0..=4, &lams).unwrap();
        assert_eq!(r.ranks, vec![2, 2, 2]);
        assert!(r.consistent(1e-8));
        let r = kernel_lambda_independence(&identity_weight(6), 0..=4, &lams).unwrap();
        assert_eq!(r.ranks, vec![1, 1, 1]);
        assert!(r.max_angle < 1e-12);
        let r = kernel_lambda_independence(&sl(1.0, 0.0, 0.0, 6), 0..=4, &lams).unwrap();
        assert_eq!(r.max_angle, 0.0);
        assert!(kernel_lambda_independence(&identity_weight(6), 0..=4, &lams[..1]).is_err());
    }

    #[test]
    fn maximal_rank_prefixes() {
        let r = maximal_rank_interval(&sl(1.0, 0.0, 1.0, 8), 8).unwrap();
        assert_eq!(r.rank, 2);
        assert!(r.end <= 2);
        assert!(r.monotone);
        let r = maximal_rank_interval(&identity_weight(8), 8).unwrap();
        assert_eq!((r.end, r.rank), (0, 1));
    }

    #[test]
    fn verdicts_and_certificates() {
        let v = is_definite(&sl(1.0, 0.0, 1.0, 4), 0..=2, c(0.3, 0.7)).unwrap();
        assert!(v.definite);
        assert!(matches!(v.certificate, Certificate::FullRank { .. }));

        let v = is_definite(&identity_weight(4), 0..=4, c(0.0, 1.0)).unwrap();
        assert!(!v.definite);
        match v.certificate {
            Certificate::Kernel { xi, semi_norm } => {
                assert!((xi[0]).norm() < 1e-12);
                assert!((xi[1] - ONE).norm() < 1e-12);
                assert!(semi_norm < 1e-6);
            }
            other => panic!("unexpected certificate {other:?}"),
        }
    }

    #[test]
    fn block_condition() {
        assert!(block_sufficient_condition(&sl(1.0, 0.0, 1.0, 3), 1).unwrap());
        assert!(block_sufficient_condition(&sl(1.0, 5.0, 1.0, 3), 1).unwrap());
        assert!(!block_sufficient_condition(&sl(1.0, 0.0, 0.0, 3), 1).unwrap());
        assert!(block_sufficient_condition(&sl(1.0, 0.0, 1.0, 3), 0).is_err());
        // B = 0 for S = I, so the condition never fires on the identity system.
        assert!(!block_sufficient_condition(&identity_weight(3), 1).unwrap());
    }
}
