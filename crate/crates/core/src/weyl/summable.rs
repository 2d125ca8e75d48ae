//! Finite-horizon estimate of the number of square-summable solutions.
//!
//! A basis of solutions is built with the discrete QR (Lyapunov) method: a
//! forward sweep `𝕊_k⁻¹(λ) Q_k = Q_{k+1} R_k` followed by backward triangular
//! solves from unit vectors at the far end. The resulting solutions are
//! separated by growth rate, so decaying directions are represented directly
//! instead of as cancelling combinations of growing ones. Magnitudes are
//! carried as logarithms to avoid overflow.

use num_complex::Complex64;

use crate::error::{Result, SympError};
use crate::linalg::{self, CMatrix, CVector};
use crate::system::SymplecticSystem;

/// Classification between two horizons `N1 < N2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairClassification {
    pub n1: usize,
    pub n2: usize,
    /// Directions with zero `Ψ`-norm on `[0, N2]`.
    pub kernel_dim: usize,
    /// `‖z‖²_{[0,N2]} / ‖z‖²_{[0,N1]}` along the principal directions,
    /// ascending.
    pub growth_ratios: Vec<f64>,
    /// `threshold^(N2 − N1)`.
    pub cutoff: f64,
    pub summable: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityEstimate {
    pub lambda: Complex64,
    /// Estimate from the last pair of horizons.
    pub d: usize,
    pub pairs: Vec<PairClassification>,
    /// `ln ‖z^{(j)}‖_{Ψ,[0,N]}` for each basis solution `j` and each `N`;
    /// `-inf` for a zero norm.
    pub log_norms: Vec<Vec<f64>>,
    /// The limit-point / limit-circle bounds only apply off the real axis.
    pub real_lambda: bool,
}

struct LyapunovBasis {
    /// `w_k^{(j)} = Q_k ĉ_k^{(j)}`, unit length.
    directions: Vec<Vec<CVector>>,
    /// `ℓ_k^{(j)}` with `z_k^{(j)} = e^{ℓ_k^{(j)}} w_k^{(j)}`.
    log_scale: Vec<Vec<f64>>,
}

impl LyapunovBasis {
    fn new(sys: &SymplecticSystem, lambda: Complex64, last: usize) -> Result<Self> {
        let dim = sys.dim();
        let mut q = Vec::with_capacity(last + 1);
        let mut r = Vec::with_capacity(last);
        q.push(linalg::identity(dim));
        for k in 0..last {
            let y = sys.s_lambda_inverse(k, lambda)? * &q[k];
            if !linalg::is_finite(&y) {
                return Err(SympError::Propagation { index: k + 1 });
            }
            let qr = y.qr();
            q.push(qr.q());
            r.push(qr.r());
        }
        let mut directions = Vec::with_capacity(dim);
        let mut log_scale = Vec::with_capacity(dim);
        for j in 0..dim {
            let mut coef = CVector::zeros(dim);
            coef[j] = linalg::ONE;
            let mut dirs = vec![CVector::zeros(dim); last + 1];
            let mut logs = vec![0.0; last + 1];
            dirs[last] = &q[last] * &coef;
            for k in (0..last).rev() {
                let next = linalg::solve_upper(&r[k], &coef);
                let size = next.norm();
                if !(size.is_finite() && size > 0.0) {
                    return Err(SympError::Propagation { index: k });
                }
                coef = next / Complex64::new(size, 0.0);
                logs[k] = logs[k + 1] + size.ln();
                dirs[k] = &q[k] * &coef;
            }
            directions.push(dirs);
            log_scale.push(logs);
        }
        Ok(Self { directions, log_scale })
    }

    fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Gram matrix over `[0, n]` with column `j` scaled by `e^{-shift_j}`.
    fn gram(&self, sys: &SymplecticSystem, n: usize, shift: &[f64]) -> Result<CMatrix> {
        let dim = self.dim();
        let mut g = CMatrix::zeros(dim, dim);
        for k in 0..=n {
            let psi = sys.psi(k)?;
            let cols: Vec<CVector> = (0..dim)
                .map(|j| &self.directions[j][k] * Complex64::new((self.log_scale[j][k] - shift[j]).exp(), 0.0))
                .collect();
            let weighted: Vec<CVector> = cols.iter().map(|v| psi * v).collect();
            for a in 0..dim {
                for b in 0..dim {
                    g[(a, b)] += cols[a].dotc(&weighted[b]);
                }
            }
        }
        Ok(linalg::hermitian_part(&g))
    }

    fn log_norm(&self, sys: &SymplecticSystem, j: usize, n: usize) -> Result<f64> {
        let mut terms = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let w = &self.directions[j][k];
            let q = w.dotc(&(sys.psi(k)? * w)).re.max(0.0);
            if q > 0.0 {
                terms.push(2.0 * self.log_scale[j][k] + q.ln());
            }
        }
        let Some(top) = terms.iter().copied().reduce(f64::max) else {
            return Ok(f64::NEG_INFINITY);
        };
        let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
        Ok(0.5 * (top + sum.ln()))
    }
}

fn classify(
    basis: &LyapunovBasis,
    sys: &SymplecticSystem,
    n1: usize,
    n2: usize,
    threshold: f64,
) -> Result<PairClassification> {
    let dim = basis.dim();
    let rank_tol = sys.tolerances().rank_tol;
    let shift: Vec<f64> =
        (0..dim).map(|j| basis.log_scale[j][..=n2].iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let g2 = basis.gram(sys, n2, &shift)?;
    let g1 = basis.gram(sys, n1, &shift)?;

    let top = (0..dim).map(|i| g2[(i, i)].re).fold(0.0, f64::max);
    let live: Vec<usize> = (0..dim).filter(|&i| g2[(i, i)].re > rank_tol * top && top > 0.0).collect();
    let scale: Vec<f64> = live.iter().map(|&i| g2[(i, i)].re.sqrt()).collect();
    let pick = |g: &CMatrix| {
        CMatrix::from_fn(live.len(), live.len(), |a, b| {
            g[(live[a], live[b])] / Complex64::new(scale[a] * scale[b], 0.0)
        })
    };
    let (g2s, g1s) = (pick(&g2), pick(&g1));

    let (values, vectors) = linalg::hermitian_eigen(&g2s);
    let vmax = values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > rank_tol * vmax).collect();
    let kernel_dim = dim - keep.len();

    let whiten = CMatrix::from_fn(live.len(), keep.len(), |r, col| {
        vectors[(r, keep[col])] / Complex64::new(values[keep[col]].sqrt(), 0.0)
    });
    let p = whiten.adjoint() * &g1s * &whiten;
    let (rho, _) = linalg::hermitian_eigen(&p);
    let mut growth_ratios: Vec<f64> =
        rho.iter().map(|&x| if x > 0.0 { 1.0 / x } else { f64::INFINITY }).collect();
    growth_ratios.sort_by(f64::total_cmp);

    let cutoff = threshold.powi((n2 - n1) as i32);
    let summable = kernel_dim + growth_ratios.iter().filter(|&&r| r <= cutoff).count();
    Ok(PairClassification { n1, n2, kernel_dim, growth_ratios, cutoff, summable })
}

/// Estimates `d_λ`, the number of linearly independent square-summable
/// solutions, by comparing `Ψ`-norm growth between successive horizons in
/// `n_list`. A direction counts as summable when its squared norm grows by
/// at most `growth_ratio_threshold` per step, or when its norm vanishes.
pub fn count_square_summable(
    sys: &SymplecticSystem,
    lambda: Complex64,
    n_list: &[usize],
    growth_ratio_threshold: f64,
) -> Result<SummabilityEstimate> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SympError::Precondition("need at least two strictly increasing horizons".into()));
    }
    if !(growth_ratio_threshold >= 1.0 && growth_ratio_threshold.is_finite()) {
        return Err(SympError::Precondition(format!(
            "growth ratio threshold must be finite and >= 1, got {growth_ratio_threshold}"
        )));
    }
    let last = *n_list.last().expect("nonempty");
    sys.check_index(last)?;
    let basis = LyapunovBasis::new(sys, lambda, last)?;
    let pairs = n_list
        .windows(2)
        .map(|w| classify(&basis, sys, w[0], w[1], growth_ratio_threshold))
        .collect::<Result<Vec<_>>>()?;
    let log_norms = (0..basis.dim())
        .map(|j| n_list.iter().map(|&n| basis.log_norm(sys, j, n)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let d = pairs.last().expect("at least one pair").summable;
    Ok(SummabilityEstimate { lambda, d, pairs, log_norms, real_lambda: lambda.im == 0.0 })
}
