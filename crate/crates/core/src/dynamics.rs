//! Forward problem: trajectories `x(t) = e^{tA} x₀` on a time grid, measurement noise and
//! trapezoid inner-product matrices between sampled curves.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{IdentError, Result};
use crate::expm::expm;
use crate::linalg::{ensure_finite, ensure_finite_vec, ensure_system};
use crate::randgen::SeededRng;

/// Relative tolerance used to decide whether a grid is evenly spaced.
pub const UNIFORM_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(IdentError::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(IdentError::NonFinite);
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(IdentError::InvalidGrid("points must be strictly increasing".into()));
        }
        Ok(TimeGrid { points })
    }

    /// `n` evenly spaced points on `[t0, t1]`.
    pub fn uniform(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if n < 2 || !(t1 > t0) {
            return Err(IdentError::InvalidGrid(format!(
                "uniform grid needs n >= 2 and t1 > t0 (n={n}, t0={t0}, t1={t1})"
            )));
        }
        let h = (t1 - t0) / (n - 1) as f64;
        let mut pts: Vec<f64> = (0..n).map(|j| t0 + h * j as f64).collect();
        pts[n - 1] = t1;
        TimeGrid::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Common step if the grid is evenly spaced.
    pub fn uniform_step(&self) -> Option<f64> {
        let n = self.len();
        let h = (self.end() - self.start()) / (n - 1) as f64;
        let ok = self
            .points
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= UNIFORM_RTOL * h.abs().max(1.0));
        ok.then_some(h)
    }

    /// Composite trapezoid weights.
    pub fn trapezoid_weights(&self) -> DVector<f64> {
        let n = self.len();
        let mut w = DVector::zeros(n);
        for j in 0..n - 1 {
            let h = self.points[j + 1] - self.points[j];
            w[j] += 0.5 * h;
            w[j + 1] += 0.5 * h;
        }
        w
    }
}

/// Noise-free samples; column `j` is `x(t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub x: DMatrix<f64>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, x: DMatrix<f64>) -> Result<Self> {
        if x.ncols() != grid.len() {
            return Err(IdentError::DimensionMismatch(format!(
                "{} columns for {} time points",
                x.ncols(),
                grid.len()
            )));
        }
        ensure_finite(&x)?;
        Ok(Trajectory { grid, x })
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub grid: TimeGrid,
    pub y: DMatrix<f64>,
    pub sigma: f64,
}

impl Observations {
    pub fn new(grid: TimeGrid, y: DMatrix<f64>, sigma: f64) -> Result<Self> {
        if y.ncols() != grid.len() {
            return Err(IdentError::DimensionMismatch(format!(
                "{} columns for {} time points",
                y.ncols(),
                grid.len()
            )));
        }
        ensure_finite(&y)?;
        Ok(Observations { grid, y, sigma })
    }

    pub fn dim(&self) -> usize {
        self.y.nrows()
    }
}

impl From<Trajectory> for Observations {
    fn from(t: Trajectory) -> Self {
        Observations {
            grid: t.grid,
            y: t.x,
            sigma: 0.0,
        }
    }
}

/// `X_{·j} = e^{t_j A} x₀`, one exponential per time point.
pub fn solve(a: &DMatrix<f64>, x0: &DVector<f64>, grid: &TimeGrid) -> Result<Trajectory> {
    let d = ensure_system(a)?;
    if x0.len() != d {
        return Err(IdentError::DimensionMismatch(format!(
            "x0 has length {}, system has dimension {d}",
            x0.len()
        )));
    }
    ensure_finite_vec(x0)?;
    let cols: Vec<Result<DVector<f64>>> = grid
        .points()
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(x0.clone());
            }
            let v = expm(&(a * t))? * x0;
            if v.iter().all(|z| z.is_finite()) {
                Ok(v)
            } else {
                Err(IdentError::Overflow)
            }
        })
        .collect();
    let mut x = DMatrix::zeros(d, grid.len());
    for (j, c) in cols.into_iter().enumerate() {
        x.set_column(j, &c?);
    }
    Trajectory::new(grid.clone(), x)
}

/// `Y = X + ε` with `ε_ij ~ N(0, σ²)` drawn from a fresh generator for `seed`.
pub fn add_noise(traj: &Trajectory, sigma: f64, seed: u64) -> Result<Observations> {
    let mut rng = SeededRng::new(seed, 0);
    add_noise_with(traj, sigma, &mut rng)
}

/// Same as [`add_noise`] but draws from a caller-owned generator (column-major order).
pub fn add_noise_with(traj: &Trajectory, sigma: f64, rng: &mut SeededRng) -> Result<Observations> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(IdentError::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut y = traj.x.clone();
    if sigma > 0.0 {
        for v in y.iter_mut() {
            *v += sigma * rng.normal();
        }
    }
    Observations::new(traj.grid.clone(), y, sigma)
}

/// `G_ij ≈ ∫ a_i(t) b_j(t) dt` by the trapezoid rule on the shared grid.
pub fn gram_matrix(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    grid: &TimeGrid,
) -> Result<DMatrix<f64>> {
    if a.ncols() != grid.len() || b.ncols() != grid.len() {
        return Err(IdentError::GridMismatch);
    }
    let w = grid.trapezoid_weights();
    let mut aw = a.clone();
    for (j, mut col) in aw.column_iter_mut().enumerate() {
        col *= w[j];
    }
    let g = aw * b.transpose();
    if std::ptr::eq(a, b) || a == b {
        Ok((&g + g.transpose()) * 0.5)
    } else {
        Ok(g)
    }
}

pub fn gram(a: &Trajectory, b: &Trajectory) -> Result<DMatrix<f64>> {
    if a.grid != b.grid {
        return Err(IdentError::GridMismatch);
    }
    gram_matrix(&a.x, &b.x, &a.grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_cond;

    #[test]
    fn scalar_decay() {
        let a = DMatrix::from_element(1, 1, -1.0);
        let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let tr = solve(&a, &DVector::from_element(1, 1.0), &grid).unwrap();
        assert_eq!(tr.x[(0, 0)], 1.0);
        assert!((tr.x[(0, 1)] - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rotation_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let grid = TimeGrid::uniform(0.0, std::f64::consts::PI, 33).unwrap();
        let tr = solve(&a, &DVector::from_vec(vec![1.0, 0.0]), &grid).unwrap();
        for (j, &t) in grid.points().iter().enumerate() {
            assert!((tr.x[(0, j)] - t.cos()).abs() < 1e-13);
            assert!((tr.x[(1, j)] + t.sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![0.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, f64::NAN]).is_err());
        let g = TimeGrid::uniform(0.0, 6.0, 61).unwrap();
        assert!((g.uniform_step().unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(g.end(), 6.0);
        assert!(TimeGrid::new(vec![0.0, 1.0, 3.0]).unwrap().uniform_step().is_none());
    }

    #[test]
    fn noise_behaviour() {
        let a = DMatrix::from_element(1, 1, -0.5);
        let grid = TimeGrid::uniform(0.0, 1.0, 101).unwrap();
        let tr = solve(&a, &DVector::from_element(1, 1.0), &grid).unwrap();
        assert_eq!(add_noise(&tr, 0.0, 3).unwrap().y, tr.x);
        let y1 = add_noise(&tr, 0.01, 3).unwrap();
        let y2 = add_noise(&tr, 0.01, 3).unwrap();
        assert_eq!(y1, y2);
        assert_ne!(y1.y, tr.x);
        assert!(add_noise(&tr, -1.0, 3).is_err());
    }

    #[test]
    fn gram_examples() {
        let grid = TimeGrid::uniform(0.0, 1.0, 11).unwrap();
        let one = Trajectory::new(grid.clone(), DMatrix::from_element(1, 11, 1.0)).unwrap();
        assert!((gram(&one, &one).unwrap()[(0, 0)] - 1.0).abs() < 1e-14);

        let grid = TimeGrid::uniform(0.0, 1.0, 1001).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let x = DMatrix::from_fn(2, 1001, |i, j| {
            let t = grid.points()[j];
            if i == 0 {
                (tau * t).sin()
            } else {
                (tau * t).cos()
            }
        });
        let tr = Trajectory::new(grid.clone(), x).unwrap();
        let g = gram(&tr, &tr).unwrap();
        assert!((g[(0, 0)] - 0.5).abs() < 1e-4);
        assert!((g[(1, 1)] - 0.5).abs() < 1e-4);
        assert!(g[(0, 1)].abs() < 1e-4);
        assert_eq!(g[(0, 1)], g[(1, 0)]);

        let other = TimeGrid::uniform(0.0, 2.0, 11).unwrap();
        let bad = Trajectory::new(other, DMatrix::from_element(1, 11, 1.0)).unwrap();
        assert_eq!(gram(&one, &bad), Err(IdentError::GridMismatch));
    }

    #[test]
    fn unidentifiable_gram_is_singular() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -1.0, 2.0, 0.0, 0.0, 3.0, 1.0, 0.0]);
        let jf = crate::realjordan::real_jordan(&a, 1e-8).unwrap();
        let xb = &jf.q * DVector::from_vec(vec![0.0, -2.0, 3.0]);
        let grid = TimeGrid::uniform(0.0, 5.0, 501).unwrap();
        let tr = solve(&a, &xb, &grid).unwrap();
        assert!(frobenius_cond(&gram(&tr, &tr).unwrap()) > 1e10);
        let xa = &jf.q * DVector::from_vec(vec![2.0, -1.0, 0.0]);
        let tr = solve(&a, &xa, &grid).unwrap();
        assert!(frobenius_cond(&gram(&tr, &tr).unwrap()) < 1e6);
    }
}
