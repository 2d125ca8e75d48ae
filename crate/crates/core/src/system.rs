//! Coefficient storage, structural validation and the λ-dependent transfer
//! matrices `𝕊_k(λ) = S_k + λ V_k`.

use std::ops::RangeInclusive;

use num_complex::Complex64;

use crate::error::{Result, SympError};
use crate::linalg::{self, frob, CMatrix, ONE};

/// Thresholds used by every structural, rank and semi-definiteness decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    /// Residual threshold for matrix identities, relative to the natural
    /// scale of the matrices involved (never below 1).
    pub structural_tol: f64,
    /// Singular-value cutoff relative to the largest singular value.
    pub rank_tol: f64,
    /// Eigenvalue floor for semi-definiteness, relative to the matrix scale.
    pub psd_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { structural_tol: 1e-10, rank_tol: 1e-10, psd_tol: 1e-10 }
    }
}

impl ToleranceConfig {
    pub fn new(structural_tol: f64, rank_tol: f64, psd_tol: f64) -> Result<Self> {
        let cfg = Self { structural_tol, rank_tol, psd_tol };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("structural_tol", self.structural_tol),
            ("rank_tol", self.rank_tol),
            ("psd_tol", self.psd_tol),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value >= 0.0) {
                return Err(SympError::Tolerance(format!("{name} must be finite and >= 0, got {value}")));
            }
        }
        if self.rank_tol >= 1.0 {
            return Err(SympError::Tolerance(format!("rank_tol must be < 1, got {}", self.rank_tol)));
        }
        Ok(())
    }
}

/// Eagerly stored coefficients `S_k`, `Ψ_k` for `k ∈ [0, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSequence {
    pub n: usize,
    pub horizon: usize,
    pub s: Vec<CMatrix>,
    pub psi: Vec<CMatrix>,
}

impl CoefficientSequence {
    pub fn new(n: usize, horizon: usize, s: Vec<CMatrix>, psi: Vec<CMatrix>) -> Result<Self> {
        if n == 0 {
            return Err(SympError::InvalidDimension("half-dimension n must be at least 1".into()));
        }
        if horizon == 0 {
            return Err(SympError::InvalidDimension("horizon N must be at least 1".into()));
        }
        let expected = horizon + 1;
        if s.len() != expected || psi.len() != expected {
            return Err(SympError::DimensionMismatch(format!(
                "expected {expected} coefficients for horizon {horizon}, got {} S and {} Psi",
                s.len(),
                psi.len()
            )));
        }
        let dim = 2 * n;
        for (k, (sk, pk)) in s.iter().zip(&psi).enumerate() {
            if sk.shape() != (dim, dim) || pk.shape() != (dim, dim) {
                return Err(SympError::Structure(format!(
                    "k={k}: S is {:?} and Psi is {:?}, expected {dim}x{dim}",
                    sk.shape(),
                    pk.shape()
                )));
            }
            if !linalg::is_finite(sk) || !linalg::is_finite(pk) {
                return Err(SympError::Structure(format!("k={k}: non-finite coefficient entry")));
            }
        }
        Ok(Self { n, horizon, s, psi })
    }
}

/// A time-reversed discrete symplectic system on the horizon `[0, N]`.
///
/// Trajectories live on `[0, N]`; the recursion uses `S_0, …, S_{N-1}` and
/// `Ψ_N` only enters semi-inner products.
#[derive(Debug, Clone)]
pub struct SymplecticSystem {
    coeffs: CoefficientSequence,
    v: Vec<CMatrix>,
    tol: ToleranceConfig,
    j: CMatrix,
}

impl SymplecticSystem {
    /// Wraps coefficients and caches `V_k`. Only dimensions are checked here;
    /// the standing hypotheses are checked by [`SymplecticSystem::validate_hypotheses`].
    pub fn new(coeffs: CoefficientSequence, tol: ToleranceConfig) -> Result<Self> {
        tol.validate()?;
        let j = make_j(coeffs.n)?;
        let v = coeffs.s.iter().zip(&coeffs.psi).map(|(s, p)| v_with_j(&j, s, p)).collect();
        Ok(Self { coeffs, v, tol, j })
    }

    /// Repeats a single `(S, Ψ)` pair over `[0, N]`.
    pub fn constant(s: CMatrix, psi: CMatrix, horizon: usize, tol: ToleranceConfig) -> Result<Self> {
        if !s.nrows().is_multiple_of(2) {
            return Err(SympError::InvalidDimension(format!("odd matrix dimension {}", s.nrows())));
        }
        let n = s.nrows() / 2;
        let coeffs =
            CoefficientSequence::new(n, horizon, vec![s; horizon + 1], vec![psi; horizon + 1])?;
        Self::new(coeffs, tol)
    }

    /// Materializes a generator `k ↦ (S_k, Ψ_k)` on `[0, N]`.
    pub fn from_generator<F>(n: usize, horizon: usize, tol: ToleranceConfig, mut gen: F) -> Result<Self>
    where
        F: FnMut(usize) -> (CMatrix, CMatrix),
    {
        let (s, psi): (Vec<_>, Vec<_>) = (0..=horizon).map(&mut gen).unzip();
        Self::new(CoefficientSequence::new(n, horizon, s, psi)?, tol)
    }

    pub fn with_tolerances(mut self, tol: ToleranceConfig) -> Result<Self> {
        tol.validate()?;
        self.tol = tol;
        Ok(self)
    }

    /// Restricts the system to the shorter horizon `[0, horizon]`.
    pub fn truncated(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 || horizon > self.horizon() {
            return Err(SympError::OutOfHorizon { index: horizon, horizon: self.horizon() });
        }
        let coeffs = CoefficientSequence {
            n: self.coeffs.n,
            horizon,
            s: self.coeffs.s[..=horizon].to_vec(),
            psi: self.coeffs.psi[..=horizon].to_vec(),
        };
        Ok(Self { coeffs, v: self.v[..=horizon].to_vec(), tol: self.tol, j: self.j.clone() })
    }

    pub fn n(&self) -> usize {
        self.coeffs.n
    }

    pub fn dim(&self) -> usize {
        2 * self.coeffs.n
    }

    pub fn horizon(&self) -> usize {
        self.coeffs.horizon
    }

    pub fn tolerances(&self) -> &ToleranceConfig {
        &self.tol
    }

    pub fn coefficients(&self) -> &CoefficientSequence {
        &self.coeffs
    }

    pub fn j(&self) -> &CMatrix {
        &self.j
    }

    pub fn s(&self, k: usize) -> Result<&CMatrix> {
        self.check_index(k)?;
        Ok(&self.coeffs.s[k])
    }

    pub fn psi(&self, k: usize) -> Result<&CMatrix> {
        self.check_index(k)?;
        Ok(&self.coeffs.psi[k])
    }

    pub fn v(&self, k: usize) -> Result<&CMatrix> {
        self.check_index(k)?;
        Ok(&self.v[k])
    }

    pub(crate) fn check_index(&self, k: usize) -> Result<()> {
        if k > self.horizon() {
            Err(SympError::OutOfHorizon { index: k, horizon: self.horizon() })
        } else {
            Ok(())
        }
    }

    /// `𝕊_k(λ) = S_k + λ V_k`.
    pub fn s_lambda(&self, k: usize, lambda: Complex64) -> Result<CMatrix> {
        self.check_index(k)?;
        Ok(&self.coeffs.s[k] + &self.v[k] * lambda)
    }

    /// `𝕊_k⁻¹(λ) = −J 𝕊_k*(λ̄) J`, exact by the symplectic structure.
    pub fn s_lambda_inverse(&self, k: usize, lambda: Complex64) -> Result<CMatrix> {
        let s_bar = self.s_lambda(k, lambda.conj())?;
        Ok(-(&self.j * s_bar.adjoint() * &self.j))
    }

    /// `Σ_{k ∈ interval} z_k* Ψ_k w_k`. An empty interval yields the zero matrix.
    pub fn semi_inner(
        &self,
        z: &TrajectorySequence,
        w: &TrajectorySequence,
        interval: RangeInclusive<usize>,
    ) -> Result<CMatrix> {
        let mut acc = CMatrix::zeros(z.cols(), w.cols());
        if interval.is_empty() {
            return Ok(acc);
        }
        for k in interval {
            self.check_index(k)?;
            let zk = z.value(k)?;
            let wk = w.value(k)?;
            if zk.nrows() != self.dim() || wk.nrows() != self.dim() {
                return Err(SympError::DimensionMismatch(format!(
                    "trajectory rows {} / {} do not match system dimension {}",
                    zk.nrows(),
                    wk.nrows(),
                    self.dim()
                )));
            }
            acc += zk.adjoint() * &self.coeffs.psi[k] * wk;
        }
        Ok(acc)
    }

    /// Semi-norm `‖z‖_Ψ` over the interval (Frobenius for several columns).
    pub fn semi_norm(&self, z: &TrajectorySequence, interval: RangeInclusive<usize>) -> Result<f64> {
        let g = self.semi_inner(z, z, interval)?;
        Ok((0..g.nrows()).map(|i| g[(i, i)].re).sum::<f64>().max(0.0).sqrt())
    }

    /// Checks `S*JS = J`, `Ψ = Ψ*`, `ΨJΨ = 0` and `Ψ ⩾ 0` at every `k`.
    pub fn validate_hypotheses(&self) -> ValidationReport {
        let tol = self.tol;
        let checks: Vec<HypothesisCheck> = (0..=self.horizon())
            .map(|k| {
                let s = &self.coeffs.s[k];
                let psi = &self.coeffs.psi[k];
                let s_scale = frob(s).powi(2).max(1.0);
                let p_scale = frob(psi).max(1.0);
                let symplectic = frob(&(s.adjoint() * &self.j * s - &self.j));
                let hermitian = frob(&(psi - psi.adjoint()));
                let nilpotent = frob(&(psi * &self.j * psi));
                let min_eig = linalg::min_eigenvalue(psi);
                let roundtrip = frob(&(&self.j * s * &self.j * self.v[k].adjoint() * &self.j - psi));

                let mut violations = Vec::new();
                if symplectic > tol.structural_tol * s_scale {
                    violations.push(Violation::NotSymplectic);
                }
                if hermitian > tol.structural_tol * p_scale {
                    violations.push(Violation::NotHermitian);
                }
                if nilpotent > tol.structural_tol * p_scale * p_scale {
                    violations.push(Violation::WeightNotIsotropic);
                }
                if hermitian > tol.structural_tol * p_scale || min_eig < -tol.psd_tol * p_scale {
                    violations.push(Violation::NotSemiDefinite);
                }
                HypothesisCheck {
                    k,
                    symplectic_residual: symplectic,
                    hermitian_residual: hermitian,
                    weight_isotropy_residual: nilpotent,
                    min_weight_eigenvalue: min_eig,
                    weight_roundtrip_residual: roundtrip,
                    violations,
                }
            })
            .collect();
        ValidationReport { checks }
    }

    /// Splits `Ψ_k = diag(W_k, 0)` and `S_k = [[A, B], [C, D]]` when the weight
    /// has that block shape.
    pub fn block_form(&self, k: usize) -> Result<BlockForm> {
        self.check_index(k)?;
        let n = self.n();
        let psi = &self.coeffs.psi[k];
        let scale = frob(psi).max(1.0);
        let off = frob(&psi.view((0, n), (n, n)).into_owned())
            + frob(&psi.view((n, 0), (n, n)).into_owned())
            + frob(&psi.view((n, n), (n, n)).into_owned());
        if off > self.tol.structural_tol * scale {
            return Err(SympError::Structure(format!(
                "k={k}: weight is not of the form diag(W, 0) (off-block mass {off:.3e})"
            )));
        }
        let s = &self.coeffs.s[k];
        Ok(BlockForm {
            a: s.view((0, 0), (n, n)).into_owned(),
            b: s.view((0, n), (n, n)).into_owned(),
            c: s.view((n, 0), (n, n)).into_owned(),
            d: s.view((n, n), (n, n)).into_owned(),
            w: psi.view((0, 0), (n, n)).into_owned(),
        })
    }
}

/// Blocks of `S_k` and the upper-left weight block `W_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockForm {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
    pub w: CMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    NotSymplectic,
    NotHermitian,
    WeightNotIsotropic,
    NotSemiDefinite,
}

impl Violation {
    pub fn name(&self) -> &'static str {
        match self {
            Violation::NotSymplectic => "symplectic",
            Violation::NotHermitian => "hermitian",
            Violation::WeightNotIsotropic => "weight_isotropic",
            Violation::NotSemiDefinite => "semi_definite",
        }
    }
}

/// Residuals of the standing hypotheses at one index.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub k: usize,
    /// `‖S*JS − J‖_F`
    pub symplectic_residual: f64,
    /// `‖Ψ − Ψ*‖_F`
    pub hermitian_residual: f64,
    /// `‖ΨJΨ‖_F`
    pub weight_isotropy_residual: f64,
    pub min_weight_eigenvalue: f64,
    /// `‖JSJV*J − Ψ‖_F`
    pub weight_roundtrip_residual: f64,
    pub violations: Vec<Violation>,
}

impl HypothesisCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(HypothesisCheck::passed)
    }

    pub fn first_failure(&self) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| !c.passed())
    }

    pub fn max_symplectic_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.symplectic_residual).fold(0.0, f64::max)
    }

    pub fn max_hermitian_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.hermitian_residual).fold(0.0, f64::max)
    }

    pub fn max_isotropy_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.weight_isotropy_residual).fold(0.0, f64::max)
    }

    pub fn min_weight_eigenvalue(&self) -> f64 {
        self.checks.iter().map(|c| c.min_weight_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    /// Distinct violation kinds in order of first appearance.
    pub fn violation_kinds(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for v in self.checks.iter().flat_map(|c| c.violations.iter()) {
            if !out.contains(v) {
                out.push(*v);
            }
        }
        out
    }
}

/// `J = [[0, I_n], [−I_n, 0]]`.
pub fn make_j(n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(SympError::InvalidDimension("J requires n >= 1".into()));
    }
    let mut j = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = ONE;
        j[(n + i, i)] = -ONE;
    }
    Ok(j)
}

/// `V = −JΨS`.
pub fn build_v(s: &CMatrix, psi: &CMatrix) -> Result<CMatrix> {
    if s.shape() != psi.shape() || s.nrows() != s.ncols() || !s.nrows().is_multiple_of(2) || s.nrows() == 0 {
        return Err(SympError::DimensionMismatch(format!(
            "S is {:?} and Psi is {:?}; need equal even square shapes",
            s.shape(),
            psi.shape()
        )));
    }
    let j = make_j(s.nrows() / 2)?;
    Ok(v_with_j(&j, s, psi))
}

fn v_with_j(j: &CMatrix, s: &CMatrix, psi: &CMatrix) -> CMatrix {
    -(j * psi * s)
}

/// The second-order Sturm–Liouville difference equation as a symplectic
/// system with `Ψ_k = diag(w_k, 0)`.
///
/// `p` is indexed from 0 and must have `N + 2` entries so that `p_{k+1}` is
/// available for every `k ∈ [0, N]`; `q` and `w` have `N + 1` entries.
pub fn from_sturm_liouville(p: &[f64], q: &[f64], w: &[f64]) -> Result<SymplecticSystem> {
    if q.len() < 2 || q.len() != w.len() || p.len() != q.len() + 1 {
        return Err(SympError::DimensionMismatch(format!(
            "need len(p) = len(q) + 1 = len(w) + 1 with horizon >= 1, got p={}, q={}, w={}",
            p.len(),
            q.len(),
            w.len()
        )));
    }
    let horizon = q.len() - 1;
    let mut s = Vec::with_capacity(horizon + 1);
    let mut psi = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        let pk1 = p[k + 1];
        if pk1 == 0.0 || !pk1.is_finite() {
            return Err(SympError::SingularCoefficient {
                index: k + 1,
                reason: format!("p_{} = {pk1} must be finite and nonzero", k + 1),
            });
        }
        if !q[k].is_finite() || !w[k].is_finite() || w[k] < 0.0 {
            return Err(SympError::Precondition(format!(
                "k={k}: need finite q and finite w >= 0, got q={}, w={}",
                q[k], w[k]
            )));
        }
        s.push(linalg::real_matrix(2, 2, &[1.0, -1.0 / pk1, -q[k], 1.0 + q[k] / pk1]));
        psi.push(linalg::real_matrix(2, 2, &[w[k], 0.0, 0.0, 0.0]));
    }
    SymplecticSystem::new(CoefficientSequence::new(1, horizon, s, psi)?, ToleranceConfig::default())
}

/// Values `z_k` for consecutive indices `k = first, first + 1, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySequence {
    pub first: usize,
    pub values: Vec<CMatrix>,
    pub lambda: Complex64,
}

impl TrajectorySequence {
    pub fn new(first: usize, values: Vec<CMatrix>, lambda: Complex64) -> Result<Self> {
        let seq = Self { first, values, lambda };
        seq.check()?;
        Ok(seq)
    }

    /// A sequence of zero columns on `[0, last]`.
    pub fn zeros(rows: usize, cols: usize, last: usize, lambda: Complex64) -> Self {
        Self { first: 0, values: vec![CMatrix::zeros(rows, cols); last + 1], lambda }
    }

    /// Builds a sequence of column vectors on `[0, values.len() - 1]`.
    pub fn from_vectors(values: Vec<crate::linalg::CVector>, lambda: Complex64) -> Self {
        let values = values.into_iter().map(|v| CMatrix::from_column_slice(v.len(), 1, v.as_slice())).collect();
        Self { first: 0, values, lambda }
    }

    fn check(&self) -> Result<()> {
        let Some(head) = self.values.first() else {
            return Err(SympError::InvalidDimension("empty trajectory".into()));
        };
        let shape = head.shape();
        for (i, v) in self.values.iter().enumerate() {
            if v.shape() != shape {
                return Err(SympError::DimensionMismatch(format!(
                    "index {}: shape {:?} differs from {:?}",
                    self.first + i,
                    v.shape(),
                    shape
                )));
            }
            if !linalg::is_finite(v) {
                return Err(SympError::Propagation { index: self.first + i });
            }
        }
        Ok(())
    }

    pub fn last(&self) -> usize {
        self.first + self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.values.first().map_or(0, |v| v.nrows())
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, |v| v.ncols())
    }

    pub fn get(&self, k: usize) -> Option<&CMatrix> {
        k.checked_sub(self.first).and_then(|i| self.values.get(i))
    }

    pub fn value(&self, k: usize) -> Result<&CMatrix> {
        self.get(k).ok_or(SympError::OutOfHorizon { index: k, horizon: self.last() })
    }

    /// Column `j` of every value, as a single-column sequence.
    pub fn column(&self, j: usize) -> Self {
        Self {
            first: self.first,
            values: self.values.iter().map(|v| v.columns(j, 1).into_owned()).collect(),
            lambda: self.lambda,
        }
    }

    /// Right-multiplies every value by `m`.
    pub fn times(&self, m: &CMatrix) -> Self {
        Self { first: self.first, values: self.values.iter().map(|v| v * m).collect(), lambda: self.lambda }
    }

    /// Largest Frobenius norm of `self_k − other_k` over the common indices.
    pub fn max_distance(&self, other: &Self) -> f64 {
        let lo = self.first.max(other.first);
        let hi = self.last().min(other.last());
        (lo..=hi)
            .map(|k| frob(&(&self.values[k - self.first] - &other.values[k - other.first])))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn lambda_sign(lambda: Complex64) -> Result<f64> {
    if lambda.im == 0.0 || !lambda.im.is_finite() {
        Err(SympError::RealLambda(lambda))
    } else {
        Ok(lambda.im.signum())
    }
}
