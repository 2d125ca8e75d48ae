//! Finite-section diagnostics for the minimal and maximal linear relations:
//! the map `K_λ`, the preimage construction for `ker K_λ`, witnesses of a
//! nontrivial multivalued part and the deficiency bookkeeping
//! `d_λ = d̃_λ + 2n − rank φ`.

use std::ops::RangeInclusive;

use num_complex::Complex64;

use crate::definiteness::{gram_phi, GramFactor};
use crate::error::{Result, SympError};
use crate::linalg::{self, frob, CMatrix};
use crate::propagation::{apply_l, transfer, Residual};
use crate::system::{lambda_sign, SymplecticSystem, TrajectorySequence};
use crate::weyl::count_square_summable;

/// `K_{λ,I}(g) = Σ_{k∈I} Φ_k*(λ̄) Ψ_k g_k` with `Φ_0(λ̄) = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KMap {
    pub lambda: Complex64,
    pub interval: (usize, usize),
    /// Blocks `Φ_k*(λ̄) Ψ_k`, one per index of the interval.
    blocks: Vec<CMatrix>,
}

impl KMap {
    pub fn new(sys: &SymplecticSystem, lambda: Complex64, interval: RangeInclusive<usize>) -> Result<Self> {
        let (lo, hi) = (*interval.start(), *interval.end());
        if lo > hi {
            return Err(SympError::Precondition(format!("empty interval [{lo}, {hi}]")));
        }
        sys.check_index(hi)?;
        let phi_bar = transfer(sys, lambda.conj(), &linalg::identity(sys.dim()), 0, hi)?;
        let blocks = (lo..=hi)
            .map(|k| Ok(phi_bar.value(k)?.adjoint() * sys.psi(k)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { lambda, interval: (lo, hi), blocks })
    }

    /// Applies the map to `g`; indices of the interval missing from `g` count as zero.
    pub fn apply(&self, g: &TrajectorySequence) -> Result<CMatrix> {
        let rows = self.blocks[0].nrows();
        let mut acc = CMatrix::zeros(rows, g.cols());
        for (i, block) in self.blocks.iter().enumerate() {
            if let Some(gk) = g.get(self.interval.0 + i) {
                acc += block * gk;
            }
        }
        Ok(acc)
    }

    /// Matrix of the map on sequences supported in the interval, with the
    /// unknowns ordered by index and then by component.
    pub fn matrix(&self) -> CMatrix {
        let dim = self.blocks[0].nrows();
        let mut m = CMatrix::zeros(dim, dim * self.blocks.len());
        for (i, block) in self.blocks.iter().enumerate() {
            m.columns_mut(i * dim, dim).copy_from(block);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeReport {
    pub lambda: Complex64,
    pub k_rank: usize,
    pub phi_rank: usize,
    /// Largest principal angle between `ran K_{λ,I}` and `Ran φ(I)`.
    pub max_angle: f64,
    /// Dimension of the finitely supported sequence space on the interval.
    pub domain_dim: usize,
    /// `domain_dim − dim ker K_{λ,I}`.
    pub kernel_codim: usize,
}

impl RangeReport {
    pub fn consistent(&self, angle_tol: f64) -> bool {
        self.k_rank == self.phi_rank && self.kernel_codim == self.phi_rank && self.max_angle <= angle_tol
    }
}

/// Compares the range of `K_{λ,I}` with `Ran φ(I)` and counts `codim ker K`.
pub fn k_map_range_check(
    sys: &SymplecticSystem,
    lambda: Complex64,
    interval: RangeInclusive<usize>,
) -> Result<RangeReport> {
    let rank_tol = sys.tolerances().rank_tol;
    let kmap = KMap::new(sys, lambda, interval.clone())?;
    let m = kmap.matrix();
    let k_range = linalg::range_basis(&m, rank_tol);
    let kernel = linalg::null_space(&m, rank_tol);
    // φ over the interval with the fundamental matrix anchored at 0.
    let phi = transfer(sys, lambda, &linalg::identity(sys.dim()), 0, *interval.end())?;
    let mut factor = GramFactor::new(sys.dim(), rank_tol);
    for k in interval.clone() {
        factor.push(sys.psi(k)?, phi.value(k)?);
    }
    let phi_range = factor.range();
    Ok(RangeReport {
        lambda,
        k_rank: k_range.ncols(),
        phi_rank: phi_range.ncols(),
        max_angle: linalg::max_principal_angle(&k_range, &phi_range),
        domain_dim: m.ncols(),
        kernel_codim: m.ncols() - kernel.ncols(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreimageReport {
    pub z: TrajectorySequence,
    /// First index `N'` with `Ψ_k g_k = 0` for every `k ≥ N'`.
    pub support_end: usize,
    pub k_value_norm: f64,
    pub z0_norm: f64,
    /// `max_{k ≥ N'} ‖z_k‖`.
    pub tail_max: f64,
    /// Defect of `L(z) − λΨz = Ψg` on `[0, N − 1]`.
    pub equation: Residual,
}

/// `z_k = −Φ_k(λ) J Σ_{j=k}^{N'−1} Φ_j*(λ̄) Ψ_j g_j` for `g` with `K_λ(g) = 0`.
pub fn preimage_construction(
    sys: &SymplecticSystem,
    lambda: Complex64,
    g: &TrajectorySequence,
) -> Result<PreimageReport> {
    let horizon = sys.horizon();
    if g.first != 0 || g.last() + 1 < horizon || g.rows() != sys.dim() {
        return Err(SympError::DimensionMismatch(format!(
            "g must have {} rows and cover [0, {}]",
            sys.dim(),
            horizon - 1
        )));
    }
    let last = g.last().min(horizon);
    let weighted: Vec<CMatrix> = (0..=last).map(|k| Ok(sys.psi(k)? * g.value(k)?)).collect::<Result<_>>()?;
    let tol = sys.tolerances();
    let wscale = weighted.iter().map(frob).fold(0.0, f64::max);
    let support_end = weighted
        .iter()
        .rposition(|w| frob(w) > tol.structural_tol * wscale.max(1.0))
        .map_or(0, |k| k + 1);

    let eye = linalg::identity(sys.dim());
    let phi = transfer(sys, lambda, &eye, 0, horizon)?;
    let phi_bar = transfer(sys, lambda.conj(), &eye, 0, horizon)?;
    let cols = g.cols();
    let mut suffix = vec![CMatrix::zeros(sys.dim(), cols); horizon + 2];
    let mut scale = 0.0_f64;
    for k in (0..support_end).rev() {
        let term = phi_bar.value(k)?.adjoint() * &weighted[k];
        scale = scale.max(frob(&term));
        suffix[k] = &suffix[k + 1] + term;
    }
    let k_value_norm = frob(&suffix[0]);
    if k_value_norm > tol.structural_tol * scale.max(1.0) {
        return Err(SympError::Precondition(format!(
            "K_lambda(g) = {k_value_norm:.3e} is not zero; g is outside the kernel"
        )));
    }
    let j = sys.j();
    let values: Vec<CMatrix> = (0..=horizon)
        .map(|k| {
            if k >= support_end {
                Ok(CMatrix::zeros(sys.dim(), cols))
            } else {
                Ok(-(phi.value(k)? * j * &suffix[k]))
            }
        })
        .collect::<Result<_>>()?;
    let z = TrajectorySequence::new(0, values, lambda)?;

    let lz = apply_l(sys, &z)?;
    let mut equation = Residual::default();
    for k in 0..horizon {
        let lhs = lz.value(k)? - sys.psi(k)? * z.value(k)? * lambda;
        let rhs = sys.psi(k)? * g.value(k)?;
        equation = equation.max(Residual::new(frob(&(&lhs - &rhs)), frob(&lhs) + frob(&rhs)));
    }
    let tail_max = (support_end..=horizon).map(|k| frob(&z.values[k])).fold(0.0, f64::max);
    Ok(PreimageReport { z0_norm: frob(&z.values[0]), z, support_end, k_value_norm, tail_max, equation })
}

/// A pair with `Ψ z ≡ 0`, `‖f‖_Ψ > 0` and `L(z) = Ψ f`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivaluedWitness {
    pub z: TrajectorySequence,
    pub f: TrajectorySequence,
    pub f_norm: f64,
    /// `max_k ‖L(z)_k − Ψ_k f_k‖_F`.
    pub relation_residual: f64,
    /// `max_k ‖Ψ_k z_k‖_F`.
    pub weight_residual: f64,
}

/// Searches for `z` with `Ψ_k z_k = 0` on `[0, N]` whose image `L(z)` lies in
/// the range of `Ψ` with nonzero `Ψ`-norm. Solutions with `z_0 = 0` are
/// preferred. The witness is scaled so that its largest entry is 1.
pub fn multivalued_witness(sys: &SymplecticSystem) -> Result<Option<MultivaluedWitness>> {
    let tol = *sys.tolerances();
    let horizon = sys.horizon();
    let dim = sys.dim();
    let kernels: Vec<CMatrix> =
        (0..=horizon).map(|k| Ok(linalg::psd_kernel(sys.psi(k)?, tol.rank_tol).1)).collect::<Result<_>>()?;
    let offsets: Vec<usize> = kernels
        .iter()
        .scan(0, |acc, kb| {
            let start = *acc;
            *acc += kb.ncols();
            Some(start)
        })
        .collect();
    let unknowns = offsets[horizon] + kernels[horizon].ncols();
    if unknowns == 0 {
        return Ok(None);
    }

    // L(z)_k = J K_k c_k − J S_k K_{k+1} c_{k+1}, stacked over k.
    let j = sys.j();
    let mut l_map = CMatrix::zeros(dim * horizon, unknowns);
    for k in 0..horizon {
        let left = j * &kernels[k];
        let right = -(j * sys.s(k)? * &kernels[k + 1]);
        l_map.view_mut((k * dim, offsets[k]), (dim, kernels[k].ncols())).copy_from(&left);
        l_map.view_mut((k * dim, offsets[k + 1]), (dim, kernels[k + 1].ncols())).copy_from(&right);
    }
    // Range condition: the ker Ψ_k component of L(z)_k vanishes.
    let constraint_rows: usize = kernels[..horizon].iter().map(|kb| kb.ncols()).sum();
    let mut constraints = CMatrix::zeros(constraint_rows, unknowns);
    let mut row = 0;
    for (k, kernel) in kernels[..horizon].iter().enumerate() {
        let width = kernel.ncols();
        let block = kernel.adjoint() * l_map.rows(k * dim, dim);
        constraints.rows_mut(row, width).copy_from(&block);
        row += width;
    }
    let pinvs: Vec<CMatrix> = (0..horizon).map(|k| Ok(linalg::pinv(sys.psi(k)?, tol.rank_tol))).collect::<Result<_>>()?;
    let mut weight = CMatrix::zeros(dim * horizon, dim * horizon);
    for (k, p) in pinvs.iter().enumerate() {
        weight.view_mut((k * dim, k * dim), (dim, dim)).copy_from(p);
    }
    let l_scale = frob(&l_map).powi(2).max(1.0);

    let first_width = kernels[0].ncols();
    let attempts: [bool; 2] = [true, false];
    for pin_start in attempts {
        if pin_start && first_width == 0 {
            continue;
        }
        let system = if pin_start {
            let mut m = constraints.clone().insert_rows(constraint_rows, first_width, linalg::ZERO);
            for i in 0..first_width {
                m[(constraint_rows + i, i)] = linalg::ONE;
            }
            m
        } else {
            constraints.clone()
        };
        let basis = linalg::null_space(&system, tol.rank_tol);
        if basis.ncols() == 0 {
            continue;
        }
        let image = &l_map * &basis;
        let quad = image.adjoint() * &weight * &image;
        let (values, vectors) = linalg::hermitian_eigen(&quad);
        let top = *values.last().expect("nonempty");
        if top <= tol.rank_tol * l_scale {
            continue;
        }
        let coef = &basis * vectors.column(values.len() - 1);
        return Ok(Some(build_witness(sys, &kernels, &offsets, &pinvs, &coef)?));
    }
    Ok(None)
}

fn build_witness(
    sys: &SymplecticSystem,
    kernels: &[CMatrix],
    offsets: &[usize],
    pinvs: &[CMatrix],
    coef: &linalg::CVector,
) -> Result<MultivaluedWitness> {
    let horizon = sys.horizon();
    let lambda = Complex64::new(0.0, 0.0);
    let mut z_vals: Vec<CMatrix> = (0..=horizon)
        .map(|k| {
            let v = &kernels[k] * coef.rows(offsets[k], kernels[k].ncols());
            CMatrix::from_column_slice(v.len(), 1, v.as_slice())
        })
        .collect();
    // Scale so the entry of largest modulus is exactly 1, then clear round-off.
    let (mut best, mut best_abs) = (linalg::ONE, 0.0);
    for v in &z_vals {
        for x in v.iter() {
            if x.norm() > best_abs {
                best_abs = x.norm();
                best = *x;
            }
        }
    }
    let scale = linalg::ONE / best;
    let mut stacked = CMatrix::zeros(sys.dim(), horizon + 1);
    for (k, v) in z_vals.iter_mut().enumerate() {
        *v *= scale;
        stacked.set_column(k, &v.column(0));
    }
    linalg::chop(&mut stacked, 1e-12);
    for (k, v) in z_vals.iter_mut().enumerate() {
        v.set_column(0, &stacked.column(k));
    }
    let z = TrajectorySequence::new(0, z_vals, lambda)?;
    let lz = apply_l(sys, &z)?;
    let mut f_vals: Vec<CMatrix> = (0..horizon).map(|k| &pinvs[k] * &lz.values[k]).collect();
    let mut f_stack = CMatrix::zeros(sys.dim(), horizon);
    for (k, v) in f_vals.iter().enumerate() {
        f_stack.set_column(k, &v.column(0));
    }
    linalg::chop(&mut f_stack, 1e-12);
    for (k, v) in f_vals.iter_mut().enumerate() {
        v.set_column(0, &f_stack.column(k));
    }
    let f = TrajectorySequence::new(0, f_vals, lambda)?;
    let f_norm = sys.semi_norm(&f, 0..=horizon - 1)?;
    let relation_residual = (0..horizon)
        .map(|k| Ok(frob(&(&lz.values[k] - sys.psi(k)? * &f.values[k]))))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let weight_residual = (0..=horizon)
        .map(|k| Ok(frob(&(sys.psi(k)? * &z.values[k]))))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(MultivaluedWitness { z, f, f_norm, relation_residual, weight_residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeficiencyReport {
    pub lambda_samples: Vec<Complex64>,
    pub d_lambda: Vec<usize>,
    /// `rank φ(λ, I)` evaluated at each sample.
    pub rank_phi: Vec<usize>,
    pub d_tilde: Vec<i64>,
    pub n: usize,
    /// (a) every `d̃_λ ≥ 0`.
    pub nonnegative: bool,
    /// (b) `d_λ − d̃_λ = 2n − rank φ` is the same at every sample.
    pub offset_constant: bool,
    /// (c) `d_λ` is constant on each half-plane.
    pub half_plane_constant: bool,
    /// (d) when the system is definite on the interval, `d̃_λ = d_λ`.
    pub definite_consistent: bool,
    /// `n ≤ d_λ ≤ 2n` at every sample.
    pub within_bounds: bool,
    pub warnings: Vec<String>,
}

impl DeficiencyReport {
    pub fn passed(&self) -> bool {
        self.nonnegative && self.offset_constant && self.half_plane_constant && self.definite_consistent && self.within_bounds
    }
}

/// Evaluates `d̃_λ = d_λ − (2n − rank φ(λ, I))` at each sample and checks the
/// consistency relations between samples. Real samples are rejected.
pub fn deficiency_consistency(
    sys: &SymplecticSystem,
    lambda_samples: &[Complex64],
    interval: RangeInclusive<usize>,
    n_list: &[usize],
    growth_ratio_threshold: f64,
) -> Result<DeficiencyReport> {
    if lambda_samples.is_empty() {
        return Err(SympError::Precondition("no lambda samples".into()));
    }
    for &lam in lambda_samples {
        lambda_sign(lam)?;
    }
    let n = sys.n();
    let k0 = *interval.start();
    let mut d_lambda = Vec::with_capacity(lambda_samples.len());
    let mut rank_phi = Vec::with_capacity(lambda_samples.len());
    for &lam in lambda_samples {
        d_lambda.push(count_square_summable(sys, lam, n_list, growth_ratio_threshold)?.d);
        rank_phi.push(gram_phi(sys, lam, interval.clone(), k0)?.rank);
    }
    let d_tilde: Vec<i64> =
        d_lambda.iter().zip(&rank_phi).map(|(&d, &r)| d as i64 - (2 * n) as i64 + r as i64).collect();

    let mut warnings = Vec::new();
    let nonnegative = d_tilde.iter().all(|&x| x >= 0);
    if !nonnegative {
        warnings.push("negative d_tilde: classification or rank decision is unreliable".to_string());
    }
    let offset_constant = rank_phi.windows(2).all(|w| w[0] == w[1]);
    if !offset_constant {
        warnings.push(format!("rank phi varies across samples: {rank_phi:?}"));
    }
    let same = |upper: bool| {
        let vals: Vec<usize> = lambda_samples
            .iter()
            .zip(&d_lambda)
            .filter(|(l, _)| (l.im > 0.0) == upper)
            .map(|(_, &d)| d)
            .collect();
        vals.windows(2).all(|w| w[0] == w[1])
    };
    let half_plane_constant = same(true) && same(false);
    if !half_plane_constant {
        warnings.push(format!("d_lambda differs within a half-plane: {d_lambda:?}"));
    }
    let definite_consistent = rank_phi
        .iter()
        .zip(d_lambda.iter().zip(&d_tilde))
        .all(|(&r, (&d, &dt))| r != 2 * n || dt == d as i64);
    let within_bounds = d_lambda.iter().all(|&d| n <= d && d <= 2 * n);
    if !within_bounds {
        warnings.push(format!("d_lambda outside [n, 2n]: {d_lambda:?}"));
    }
    Ok(DeficiencyReport {
        lambda_samples: lambda_samples.to_vec(),
        d_lambda,
        rank_phi,
        d_tilde,
        n,
        nonnegative,
        offset_constant,
        half_plane_constant,
        definite_consistent,
        within_bounds,
        warnings,
    })
}
