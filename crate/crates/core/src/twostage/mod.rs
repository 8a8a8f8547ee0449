//! Two-stage estimation `Â = Y L Y′ (Y S Y′)⁻¹` with simple-difference or smoothing-spline
//! operator pairs `(S, L)`.

pub mod spline;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Observations, TimeGrid};
use crate::error::{IdentError, Result};
use crate::linalg::{ensure_finite, frobenius, frobenius_cond, solve_right};

pub use spline::SplineFactor;

pub const DEFAULT_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum OperatorKind {
    Simple,
    Spline {
        lambda: f64,
        basis_size: usize,
        order: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Simple { dt: f64 },
    Spline(Box<SplineFactor>),
}

/// The `n × n` pair `(S, L)`. Products with a data matrix from the right are computed without
/// forming the operators; [`SmootherOperators::s`] and [`SmootherOperators::l`] build them
/// densely on request.
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherOperators {
    pub kind: OperatorKind,
    n: usize,
    repr: Repr,
}

impl SmootherOperators {
    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.n {
            return Err(IdentError::DimensionMismatch(format!(
                "data has {} time points, operators expect {}",
                x.ncols(),
                self.n
            )));
        }
        Ok(())
    }

    /// `X S`.
    pub fn apply_s(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(match &self.repr {
            Repr::Simple { .. } => x.clone(),
            Repr::Spline(f) => f.apply_s(x),
        })
    }

    /// `X S′` (equal to `X S`; both operator kinds have symmetric `S`).
    pub fn apply_st(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.apply_s(x)
    }

    /// `X L`.
    pub fn apply_l(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(match &self.repr {
            Repr::Simple { dt } => {
                let mut out = DMatrix::zeros(x.nrows(), self.n);
                for j in 0..self.n - 1 {
                    let col = (x.column(j + 1) - x.column(j)) / *dt;
                    out.set_column(j, &col);
                }
                out
            }
            Repr::Spline(f) => f.apply_l(x),
        })
    }

    /// `X L′`.
    pub fn apply_lt(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(match &self.repr {
            Repr::Simple { dt } => {
                let mut out = DMatrix::zeros(x.nrows(), self.n);
                for i in 0..self.n {
                    let mut col = x.column(0) * 0.0;
                    if i + 1 < self.n {
                        col -= x.column(i);
                    }
                    if i >= 1 {
                        col += x.column(i - 1);
                    }
                    out.set_column(i, &(col / *dt));
                }
                out
            }
            Repr::Spline(f) => f.apply_lt(x),
        })
    }

    pub fn s(&self) -> DMatrix<f64> {
        self.apply_s(&DMatrix::identity(self.n, self.n))
            .expect("identity has matching size")
    }

    pub fn l(&self) -> DMatrix<f64> {
        self.apply_l(&DMatrix::identity(self.n, self.n))
            .expect("identity has matching size")
    }

    pub fn spline(&self) -> Option<&SplineFactor> {
        match &self.repr {
            Repr::Spline(f) => Some(f),
            Repr::Simple { .. } => None,
        }
    }
}

/// `S = I`, `L` the forward-difference matrix scaled by `1/Δt` with a zero last column.
pub fn simple_operators(grid: &TimeGrid) -> Result<SmootherOperators> {
    let dt = grid.uniform_step().ok_or(IdentError::NonUniformGrid)?;
    Ok(SmootherOperators {
        kind: OperatorKind::Simple,
        n: grid.len(),
        repr: Repr::Simple { dt },
    })
}

/// Penalized B-spline operators with knots at every grid point.
pub fn spline_operators(grid: &TimeGrid, lambda: f64, order: usize) -> Result<SmootherOperators> {
    let f = SplineFactor::new(grid, lambda, order)?;
    Ok(SmootherOperators {
        kind: OperatorKind::Spline {
            lambda,
            basis_size: f.basis_size(),
            order,
        },
        n: grid.len(),
        repr: Repr::Spline(Box::new(f)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    #[serde(with = "crate::io::matrix_rows")]
    pub a_hat: DMatrix<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ree: Option<f64>,
    pub gram_cond: f64,
}

/// `Â = X L X′ (X S X′)⁻¹` together with the condition number of `X S X′`.
pub fn estimate_matrix(
    x: &DMatrix<f64>,
    ops: &SmootherOperators,
) -> Result<(DMatrix<f64>, f64)> {
    ensure_finite(x)?;
    let xs = ops.apply_s(x)?;
    let gram = &xs * x.transpose();
    let cond = frobenius_cond(&gram);
    if !cond.is_finite() {
        return Err(IdentError::SingularGram { cond });
    }
    let cross = ops.apply_l(x)? * x.transpose();
    let a_hat = solve_right(&cross, &gram).ok_or(IdentError::SingularGram { cond })?;
    if a_hat.iter().any(|v| !v.is_finite()) {
        return Err(IdentError::SingularGram { cond });
    }
    Ok((a_hat, cond))
}

pub fn two_stage_estimate(
    obs: &Observations,
    ops: &SmootherOperators,
    truth: Option<&DMatrix<f64>>,
) -> Result<EstimateReport> {
    let (a_hat, gram_cond) = estimate_matrix(&obs.y, ops)?;
    let ree = match truth {
        Some(a) => Some(ree(&a_hat, a)?),
        None => None,
    };
    Ok(EstimateReport {
        a_hat,
        ree,
        gram_cond,
    })
}

/// `‖Â − A‖_F / ‖A‖_F`.
pub fn ree(a_hat: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<f64> {
    if a_hat.shape() != a.shape() {
        return Err(IdentError::DimensionMismatch(format!(
            "estimate is {:?}, truth is {:?}",
            a_hat.shape(),
            a.shape()
        )));
    }
    let na = frobenius(a);
    if na == 0.0 {
        return Err(IdentError::ZeroTruth);
    }
    Ok(frobenius(&(a_hat - a)) / na)
}
