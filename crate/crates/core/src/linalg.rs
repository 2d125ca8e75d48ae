//! Small dense complex linear algebra helpers on top of `nalgebra`.
//!
//! Matrices in this crate are at most a few dozen rows wide, so everything is
//! dense and allocation-happy. Rank and semi-definiteness decisions go through
//! singular values or Hermitian eigenvalues with relative cutoffs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a complex matrix from real row-major entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols);
    CMatrix::from_fn(rows, cols, |i, j| c(entries[i * cols + j], 0.0))
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Frobenius norm, rescaled when squaring the entries would overflow or
/// underflow.
pub fn frob(m: &CMatrix) -> f64 {
    let amax = m.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if amax == 0.0 || !amax.is_finite() {
        return amax;
    }
    if (1e-150..1e150).contains(&amax) {
        m.norm()
    } else {
        amax * m.map(|z| z.unscale(amax)).norm()
    }
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let dim = m.nrows();
    if dim == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(dim, dim, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.last().copied().unwrap_or(0.0)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rank_tol * σ_max`. A zero matrix has rank 0.
pub fn numerical_rank(sv: &[f64], rank_tol: f64) -> usize {
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    if smax <= f64::MIN_POSITIVE {
        return 0;
    }
    sv.iter().filter(|&&s| s > rank_tol * smax).count()
}

/// Orthonormal basis of the column space, with the same relative cutoff as
/// [`numerical_rank`].
pub fn range_basis(m: &CMatrix, rank_tol: f64) -> CMatrix {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return CMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    if smax <= f64::MIN_POSITIVE {
        return CMatrix::zeros(rows, 0);
    }
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > rank_tol * smax).collect();
    CMatrix::from_fn(rows, keep.len(), |r, col| u[(r, keep[col])])
}

/// Orthonormal basis of the null space of `m` (columns), computed from the
/// right singular vectors.
pub fn null_space(m: &CMatrix, rank_tol: f64) -> CMatrix {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return identity(cols);
    }
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    // Pad to at least square so that the SVD yields a full set of right vectors.
    let padded = if m.nrows() < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    let keep: Vec<usize> = (0..sv.len())
        .filter(|&i| smax <= f64::MIN_POSITIVE || sv[i] <= rank_tol * smax)
        .collect();
    CMatrix::from_fn(cols, keep.len(), |r, col| v_t[(keep[col], r)].conj())
}

/// Kernel of a Hermitian positive semi-definite matrix: eigenvectors whose
/// eigenvalue is at most `rank_tol * λ_max`.
pub fn psd_kernel(m: &CMatrix, rank_tol: f64) -> (Vec<f64>, CMatrix) {
    let (values, vectors) = hermitian_eigen(m);
    let top = values.iter().copied().fold(0.0_f64, |a, b| a.max(b.abs()));
    let keep: Vec<usize> = (0..values.len())
        .filter(|&i| top <= f64::MIN_POSITIVE || values[i] <= rank_tol * top)
        .collect();
    let basis = CMatrix::from_fn(m.nrows(), keep.len(), |r, col| vectors[(r, keep[col])]);
    (values, basis)
}

/// `L` with `L* L = m` for a Hermitian positive semi-definite `m`.
/// Eigenvalues at most `rank_tol * λ_max` count as zero, as in [`psd_kernel`];
/// their square roots would otherwise be far above rounding level.
pub fn psd_root(m: &CMatrix, rank_tol: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let top = values.iter().copied().fold(0.0_f64, |a, b| a.max(b.abs()));
    let mut root = vectors.adjoint();
    for (i, &v) in values.iter().enumerate() {
        let kept = if v > rank_tol * top { v.sqrt() } else { 0.0 };
        root.row_mut(i).scale_mut(kept);
    }
    root
}

/// Largest principal angle between the column spans of two matrices with
/// orthonormal columns. Subspaces of different dimension are reported as
/// `π/2` apart.
pub fn max_principal_angle(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    // acos of the overlap singular values loses precision for small angles;
    // the sine comes directly from the part of b outside span(a).
    let residual = b - a * (a.adjoint() * b);
    let sin_max = singular_values(&residual).first().copied().unwrap_or(0.0).min(1.0);
    sin_max.asin()
}

/// Moore–Penrose pseudo-inverse with a relative singular-value cutoff.
pub fn pinv(m: &CMatrix, rank_tol: f64) -> CMatrix {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return CMatrix::zeros(cols, rows);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u");
    let v_t = svd.v_t.expect("v_t");
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    let mut out = CMatrix::zeros(cols, rows);
    for (i, &s) in sv.iter().enumerate() {
        if smax > f64::MIN_POSITIVE && s > rank_tol * smax {
            let vi = v_t.row(i).adjoint();
            let ui = u.column(i).adjoint();
            out += (vi * ui) * c(1.0 / s, 0.0);
        }
    }
    out
}

/// Rescales `v` so its entry of largest modulus is real and positive with
/// modulus one. Zero vectors are left untouched.
pub fn normalize_phase(v: &mut CVector) {
    let mut best = 0usize;
    let mut best_abs = 0.0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > best_abs {
            best_abs = z.norm();
            best = i;
        }
    }
    if best_abs > 0.0 {
        let scale = v[best].conj() / (best_abs * best_abs);
        *v *= scale;
    }
}

/// Sets to zero entries whose modulus is below `tol` times the largest.
pub fn chop(m: &mut CMatrix, tol: f64) {
    let top = m.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    for z in m.iter_mut() {
        if z.norm() <= tol * top {
            *z = ZERO;
        }
    }
}

/// Solves `r x = b` for upper-triangular `r` by back substitution.
pub(crate) fn solve_upper(r: &CMatrix, b: &CVector) -> CVector {
    let dim = r.nrows();
    let mut x = b.clone();
    for i in (0..dim).rev() {
        let mut acc = x[i];
        for j in (i + 1)..dim {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
    x
}
