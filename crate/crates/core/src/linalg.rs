//! Tolerance-aware dense linear algebra shared by every analysis module.
//!
//! Ranks are decided from the singular values: `sigma_i` counts toward the
//! rank when `sigma_i > eps * sigma_max * max(rows, cols)`. Exact-arithmetic
//! statements such as "rank(CB) = l" are evaluated through this rule.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative threshold used to decide numerical rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTolerance(f64);

impl RankTolerance {
    pub const DEFAULT_EPSILON: f64 = 1e-10;

    pub fn new(relative_epsilon: f64) -> Result<Self> {
        if relative_epsilon.is_finite() && relative_epsilon > 0.0 && relative_epsilon < 1.0 {
            Ok(Self(relative_epsilon))
        } else {
            Err(Error::InvalidArgument(format!("rank tolerance must lie in (0, 1), got {relative_epsilon}")))
        }
    }

    pub fn epsilon(self) -> f64 {
        self.0
    }

    /// Cut-off below which a singular value is treated as zero.
    pub fn threshold(self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        self.0 * sigma_max * rows.max(cols) as f64
    }
}

impl Default for RankTolerance {
    fn default() -> Self {
        Self(Self::DEFAULT_EPSILON)
    }
}

pub fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidMatrix(format!("{what} has non-finite entries")))
    }
}

pub fn ensure_finite_vec(v: &Vector, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidMatrix(format!("{what} has non-finite entries")))
    }
}

/// Thin SVD `(U, sigma, V)` with `A = U diag(sigma) V^T`, singular values in
/// descending order.
///
/// One-sided Jacobi: columns of a working copy are rotated pairwise until
/// mutually orthogonal. Small singular values of rank-deficient matrices come
/// out at round-off level, which the rank rule relies on.
struct Svd {
    u: Matrix,
    sigma: Vec<f64>,
    v: Matrix,
}

const JACOBI_MAX_SWEEPS: usize = 80;

fn jacobi_svd(m: &Matrix) -> Svd {
    if m.nrows() < m.ncols() {
        let t = jacobi_svd(&m.transpose());
        return Svd { u: t.v, sigma: t.sigma, v: t.u };
    }
    let cols = m.ncols();
    let mut w = m.clone();
    let mut v = Matrix::identity(cols, cols);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || libm::fabs(gamma) <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(usize, f64)> = (0..cols).map(|j| (j, w.column(j).norm())).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut u = Matrix::zeros(m.nrows(), cols);
    let mut v_sorted = Matrix::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    for (k, &(j, s)) in order.iter().enumerate() {
        if s > 0.0 {
            u.set_column(k, &(w.column(j) / s));
        }
        v_sorted.set_column(k, &v.column(j));
        sigma.push(s);
    }
    Svd { u, sigma, v: v_sorted }
}

fn rotate(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (a, b) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * a - s * b;
        m[(i, q)] = s * a + c * b;
    }
}

/// SVD truncated to the numerically nonzero part.
struct Truncated {
    u: Matrix,
    sigma: Vec<f64>,
    v: Matrix,
}

fn truncated_svd(m: &Matrix, tol: RankTolerance) -> Truncated {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Truncated { u: Matrix::zeros(rows, 0), sigma: Vec::new(), v: Matrix::zeros(cols, 0) };
    }
    let svd = jacobi_svd(m);
    let sigma_max = svd.sigma[0];
    let cut = tol.threshold(sigma_max, rows, cols);
    let keep = svd.sigma.iter().take_while(|&&s| sigma_max > 0.0 && s > cut).count();
    Truncated {
        u: svd.u.columns(0, keep).into_owned(),
        sigma: svd.sigma[..keep].to_vec(),
        v: svd.v.columns(0, keep).into_owned(),
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    jacobi_svd(m).sigma
}

/// Rank of a matrix already known to be finite.
pub(crate) fn rank_of(m: &Matrix, tol: RankTolerance) -> usize {
    let s = singular_values(m);
    let Some(&sigma_max) = s.first() else {
        return 0;
    };
    if sigma_max == 0.0 {
        return 0;
    }
    let cut = tol.threshold(sigma_max, m.nrows(), m.ncols());
    s.iter().filter(|&&x| x > cut).count()
}

pub fn numerical_rank(m: &Matrix, tol: RankTolerance) -> Result<usize> {
    ensure_finite(m, "matrix")?;
    Ok(rank_of(m, tol))
}

/// Whether `m` is negligible relative to `scale`, i.e. its largest singular
/// value does not exceed `eps * scale * max(rows, cols)`.
///
/// A lone relative test cannot call a matrix zero, so products such as
/// `C A^k B` are judged against the norms of their factors.
pub(crate) fn is_negligible(m: &Matrix, scale: f64, tol: RankTolerance) -> bool {
    let sigma_max = singular_values(m).first().copied().unwrap_or(0.0);
    sigma_max <= tol.threshold(scale, m.nrows(), m.ncols())
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Moore-Penrose pseudoinverse under the default tolerance.
pub fn pseudoinverse(m: &Matrix) -> Result<Matrix> {
    pseudoinverse_with(m, RankTolerance::default())
}

pub fn pseudoinverse_with(m: &Matrix, tol: RankTolerance) -> Result<Matrix> {
    ensure_finite(m, "matrix")?;
    let t = truncated_svd(m, tol);
    let mut v = t.v;
    for (j, s) in t.sigma.iter().enumerate() {
        v.column_mut(j).scale_mut(1.0 / s);
    }
    Ok(v * t.u.transpose())
}

/// Orthonormal basis of the column space, one column per retained singular value.
pub fn column_space_basis(m: &Matrix, tol: RankTolerance) -> Result<Matrix> {
    ensure_finite(m, "matrix")?;
    Ok(truncated_svd(m, tol).u)
}

/// Orthogonal projection of `v` onto the column space of `m`.
///
/// Equals `M (M^T M)^+ M^T v`; evaluated as `U_r U_r^T v` with `U_r` the
/// retained left singular vectors.
pub fn project_onto_columnspace(m: &Matrix, v: &Vector) -> Result<Vector> {
    project_onto_columnspace_with(m, v, RankTolerance::default())
}

pub fn project_onto_columnspace_with(m: &Matrix, v: &Vector, tol: RankTolerance) -> Result<Vector> {
    if v.len() != m.nrows() {
        return Err(Error::Dimension(format!(
            "vector of length {} cannot be projected onto the column space of a {}x{} matrix",
            v.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite_vec(v, "vector")?;
    let basis = column_space_basis(m, tol)?;
    Ok(&basis * (basis.transpose() * v))
}

/// Block anti-diagonal permutation with `blocks` identity blocks of size `q`.
///
/// Multiplying by it reverses the block order; it is its own inverse.
pub fn permutation_matrix(q: usize, blocks: usize) -> Result<Matrix> {
    if q == 0 || blocks == 0 {
        return Err(Error::InvalidArgument(format!(
            "permutation matrix needs q >= 1 and blocks >= 1, got q = {q}, blocks = {blocks}"
        )));
    }
    let size = q * blocks;
    let mut p = Matrix::zeros(size, size);
    for b in 0..blocks {
        let row = b * q;
        let col = (blocks - 1 - b) * q;
        for i in 0..q {
            p[(row + i, col + i)] = 1.0;
        }
    }
    Ok(p)
}

/// Horizontal concatenation; every part must have `rows` rows.
pub fn hstack(rows: usize, parts: &[&Matrix]) -> Matrix {
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        debug_assert_eq!(p.nrows(), rows);
        out.view_mut((0, at), (rows, p.ncols())).copy_from(*p);
        at += p.ncols();
    }
    out
}

/// Vertical concatenation; every part must have `cols` columns.
pub fn vstack(cols: usize, parts: &[&Matrix]) -> Matrix {
    let rows = parts.iter().map(|p| p.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        debug_assert_eq!(p.ncols(), cols);
        out.view_mut((at, 0), (p.nrows(), cols)).copy_from(*p);
        at += p.nrows();
    }
    out
}
