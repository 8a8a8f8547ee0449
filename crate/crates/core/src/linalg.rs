//! Small dense linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{IdentError, Result};

/// Relative threshold on `sigma_min / sigma_max` below which a matrix is treated as singular.
pub const SINGULAR_RTOL: f64 = 1e-14;

/// Relative threshold used for numerical rank decisions.
pub const RANK_RTOL: f64 = 1e-10;

pub fn ensure_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(IdentError::NonFinite)
    }
}

pub fn ensure_finite_vec(v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(IdentError::NonFinite)
    }
}

pub fn ensure_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(IdentError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Validates a system matrix: square, nonempty, finite.
pub fn ensure_system(m: &DMatrix<f64>) -> Result<usize> {
    let d = ensure_square(m)?;
    ensure_finite(m)?;
    Ok(d)
}

pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    m.clone().svd(false, false).singular_values
}

/// Frobenius-norm condition number `|M|_F |M^-1|_F`.
///
/// Returns `+inf` when the smallest singular value is below [`SINGULAR_RTOL`] times the largest
/// (or the matrix is zero).
pub fn frobenius_cond(m: &DMatrix<f64>) -> f64 {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sv = singular_values(m);
    let smax = sv.max();
    let smin = sv.min();
    if !(smax > 0.0) || !smin.is_finite() || smin < SINGULAR_RTOL * smax {
        return f64::INFINITY;
    }
    let fro = sv.iter().map(|s| s * s).sum::<f64>().sqrt();
    let inv_fro = sv.iter().map(|s| 1.0 / (s * s)).sum::<f64>().sqrt();
    fro * inv_fro
}

/// Numerical rank with singular values thresholded at `rtol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = singular_values(m);
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * smax).count()
}

/// Solves `X * G = rhs` for `X` where `G` is square.
pub fn solve_right(rhs: &DMatrix<f64>, g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let lu = g.transpose().lu();
    lu.solve(&rhs.transpose()).map(|x| x.transpose())
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Column-major vectorization.
pub fn vec_col_major(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Kronecker product.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Induced 1-norm (max absolute column sum).
pub fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn is_symmetric(m: &DMatrix<f64>, rtol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    (m - m.transpose()).norm() <= rtol * scale
}
