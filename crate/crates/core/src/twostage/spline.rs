//! Roughness-penalized B-spline smoother with knots at every observation time.
//!
//! Basis: order-`k` B-splines on the knot vector `[t₁×k, t₂, …, t_{n-1}, t_n×k]`, so there are
//! `B = n + k - 2` basis functions. With `Φ` the `n × B` evaluation matrix, `Jφ = ⟨φ, φ⟩`,
//! `G = ⟨Dφ, φ⟩` and `R = ⟨D²φ, D²φ⟩`, the fitted coefficients are `Ĉ = Y H` with
//! `H = Φ M⁻¹`, `M = Φ′Φ + λR`. All Gram matrices are banded; `M` is factored once by a banded
//! Cholesky and the `n × n` operators `S = H Jφ H′`, `L = H G H′` are applied without ever
//! being formed.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::TimeGrid;
use crate::error::{IdentError, Result};

/// Largest accepted condition number of `Φ′Φ + λR`.
pub const MAX_BASIS_COND: f64 = 1e14;
const JITTER_RTOL: f64 = 1e-12;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for k in 1..=m {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * k - 1) as f64 * z * p2 - (k - 1) as f64 * p3) / k as f64;
            }
            dp = m as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[m - 1 - i] = z;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// B-spline basis on a clamped knot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    pub knots: Vec<f64>,
    pub order: usize,
    pub size: usize,
}

impl BSplineBasis {
    /// Knots at every grid point, clamped at both ends.
    pub fn at_grid(grid: &TimeGrid, order: usize) -> Result<Self> {
        if !(2..=8).contains(&order) {
            return Err(IdentError::InvalidParameter(format!(
                "spline order must be in 2..=8, got {order}"
            )));
        }
        let t = grid.points();
        let n = t.len();
        let mut knots = Vec::with_capacity(n + 2 * order - 2);
        knots.extend(std::iter::repeat_n(t[0], order));
        knots.extend_from_slice(&t[1..n - 1]);
        knots.extend(std::iter::repeat_n(t[n - 1], order));
        Ok(BSplineBasis {
            size: n + order - 2,
            knots,
            order,
        })
    }

    fn degree(&self) -> usize {
        self.order - 1
    }

    /// Knot span `s` with `knots[s] <= x < knots[s+1]` (the last span for the right end).
    pub fn span(&self, x: f64) -> usize {
        let p = self.degree();
        let nb = self.size;
        if x >= self.knots[nb] {
            return nb - 1;
        }
        if x <= self.knots[p] {
            return p;
        }
        let (mut lo, mut hi) = (p, nb);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Values of the nonzero basis functions `span-p ..= span` and their derivatives up to
    /// `nd`: `out[k][j]` is the `k`-th derivative of basis `span - p + j`.
    pub fn derivatives(&self, span: usize, x: f64, nd: usize) -> Vec<Vec<f64>> {
        let p = self.degree();
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![0.0; p + 1]; nd + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let top = nd.min(p);
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=top {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = (p - k) as isize;
                if r >= k {
                    let rku = rk as usize;
                    a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rku];
                    d = a[s2][0] * ndu[rku][pk as usize];
                }
                let j1: usize = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2: usize = if r as isize - 1 <= pk { k - 1 } else { p - r };
                if j1 <= j2 {
                    for j in j1..=j2 {
                        let idx = (rk + j as isize) as usize;
                        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[(pk + 1) as usize][idx];
                        d += a[s2][j] * ndu[idx][pk as usize];
                    }
                }
                if r as isize <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[(pk + 1) as usize][r];
                    d += a[s2][k] * ndu[r][pk as usize];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for (k, row) in ders.iter_mut().enumerate().skip(1).take(top) {
            for v in row.iter_mut() {
                *v *= fac;
            }
            fac *= (p - k) as f64;
        }
        ders
    }

    /// `Σ_j c_j D^deriv φ_j(x)`.
    pub fn evaluate(&self, coeffs: &[f64], x: f64, deriv: usize) -> f64 {
        let s = self.span(x);
        let p = self.degree();
        let ders = self.derivatives(s, x, deriv);
        if deriv > p {
            return 0.0;
        }
        (0..=p).map(|j| coeffs[s - p + j] * ders[deriv][j]).sum()
    }
}

/// Sparse matrix stored as a contiguous run of nonzeros per row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowRuns {
    pub ncols: usize,
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl RowRuns {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// `X · self` for `X` with `nrows()` columns.
    pub fn right_mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), self.ncols);
        for (i, (start, vals)) in self.rows.iter().enumerate() {
            for (k, &v) in vals.iter().enumerate() {
                for r in 0..x.nrows() {
                    out[(r, start + k)] += x[(r, i)] * v;
                }
            }
        }
        out
    }

    /// `X · selfᵀ` for `X` with `ncols` columns.
    pub fn right_mul_t(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), self.nrows());
        for (i, (start, vals)) in self.rows.iter().enumerate() {
            for (k, &v) in vals.iter().enumerate() {
                for r in 0..x.nrows() {
                    out[(r, i)] += x[(r, start + k)] * v;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows(), self.ncols);
        for (i, (start, vals)) in self.rows.iter().enumerate() {
            for (k, &v) in vals.iter().enumerate() {
                m[(i, start + k)] = v;
            }
        }
        m
    }
}

/// Square band matrix with equal lower and upper half-bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub n: usize,
    pub hw: usize,
    data: Vec<f64>,
}

impl Band {
    pub fn zeros(n: usize, hw: usize) -> Self {
        Band {
            n,
            hw,
            data: vec![0.0; n * (2 * hw + 1)],
        }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.hw + 1) + (j + self.hw - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i.abs_diff(j) <= self.hw
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    fn cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.hw)..(i + self.hw + 1).min(self.n)
    }

    /// `X · self`.
    pub fn right_mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), self.n);
        for i in 0..self.n {
            for j in self.cols(i) {
                let v = self.get(i, j);
                if v != 0.0 {
                    for r in 0..x.nrows() {
                        out[(r, j)] += x[(r, i)] * v;
                    }
                }
            }
        }
        out
    }

    /// `X · selfᵀ`.
    pub fn right_mul_t(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), self.n);
        for i in 0..self.n {
            for j in self.cols(i) {
                let v = self.get(i, j);
                if v != 0.0 {
                    for r in 0..x.nrows() {
                        out[(r, i)] += x[(r, j)] * v;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| self.cols(i).map(|j| self.get(i, j) * v[j]).sum())
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    fn scaled_add(&self, other: &Band, c: f64) -> Band {
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().zip(&other.data) {
            *o += c * v;
        }
        out
    }
}

/// Lower Cholesky factor of a symmetric positive definite band matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCholesky {
    n: usize,
    hw: usize,
    // Row i holds L[i, i-hw ..= i].
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn new(m: &Band) -> Option<Self> {
        let (n, p) = (m.n, m.hw);
        let w = p + 1;
        let mut l = vec![0.0; n * w];
        let at = |i: usize, j: usize| i * w + (j + p - i);
        for i in 0..n {
            for j in i.saturating_sub(p)..=i {
                let mut s = m.get(i, j);
                for k in i.saturating_sub(p).max(j.saturating_sub(p))..j {
                    s -= l[at(i, k)] * l[at(j, k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[at(i, i)] = s.sqrt();
                } else {
                    l[at(i, j)] = s / l[at(j, j)];
                }
            }
        }
        Some(BandCholesky { n, hw: p, l })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (self.hw + 1) + (j + self.hw - i)]
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, p) = (self.n, self.hw);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(p)..i {
                s -= self.at(i, k) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + p + 1).min(n) {
                s -= self.at(k, i) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
    }

    /// `X M⁻¹` (equivalently `(M⁻¹ Xᵀ)ᵀ`, `M` symmetric).
    pub fn solve_rows(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        let mut buf = vec![0.0; self.n];
        for r in 0..x.nrows() {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = x[(r, j)];
            }
            self.solve_in_place(&mut buf);
            for (j, b) in buf.iter().enumerate() {
                out[(r, j)] = *b;
            }
        }
        out
    }
}

/// Ratio of extreme eigenvalues of a symmetric positive definite band matrix, estimated by
/// power iteration and inverse iteration.
pub fn condition_estimate(m: &Band, chol: &BandCholesky) -> f64 {
    let n = m.n;
    let start = DVector::from_fn(n, |i, _| 1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0);
    let mut v = start.normalize();
    let mut lmax = 0.0;
    for _ in 0..200 {
        let w = m.mul_vec(&v);
        let nw = w.norm();
        if nw == 0.0 {
            return f64::INFINITY;
        }
        let next = w / nw;
        let converged = (nw - lmax).abs() <= 1e-6 * nw;
        lmax = nw;
        v = next;
        if converged {
            break;
        }
    }
    let mut v = start.normalize();
    let mut inv_max = 0.0;
    for _ in 0..200 {
        let mut w = v.as_slice().to_vec();
        chol.solve_in_place(&mut w);
        let w = DVector::from_vec(w);
        let nw = w.norm();
        if !nw.is_finite() {
            return f64::INFINITY;
        }
        let converged = (nw - inv_max).abs() <= 1e-6 * nw;
        inv_max = nw;
        v = w / nw;
        if converged {
            break;
        }
    }
    lmax * inv_max
}

/// Factored spline smoother operators.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineFactor {
    pub basis: BSplineBasis,
    pub lambda: f64,
    pub phi: RowRuns,
    pub jphi: Band,
    pub g: Band,
    pub r: Band,
    pub chol: BandCholesky,
    pub cond: f64,
}

impl SplineFactor {
    pub fn new(grid: &TimeGrid, lambda: f64, order: usize) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(IdentError::InvalidParameter(format!(
                "lambda must be >= 0, got {lambda}"
            )));
        }
        let basis = BSplineBasis::at_grid(grid, order)?;
        let p = order - 1;
        let nb = basis.size;

        let rows = grid
            .points()
            .iter()
            .map(|&t| {
                let s = basis.span(t);
                (s - p, basis.derivatives(s, t, 0).swap_remove(0))
            })
            .collect();
        let phi = RowRuns { ncols: nb, rows };

        let mut jphi = Band::zeros(nb, p);
        let mut g = Band::zeros(nb, p);
        let mut r = Band::zeros(nb, p);
        let (nodes, weights) = gauss_legendre(order);
        for s in p..nb {
            let (a, b) = (basis.knots[s], basis.knots[s + 1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (&z, &w) in nodes.iter().zip(&weights) {
                let x = mid + half * z;
                let ders = basis.derivatives(s, x, 2.min(p).max(1));
                let wt = w * half;
                for i in 0..=p {
                    for j in 0..=p {
                        let (gi, gj) = (s - p + i, s - p + j);
                        jphi.add(gi, gj, wt * ders[0][i] * ders[0][j]);
                        g.add(gi, gj, wt * ders[1][i] * ders[0][j]);
                        if p >= 2 {
                            r.add(gi, gj, wt * ders[2][i] * ders[2][j]);
                        }
                    }
                }
            }
        }

        // Φ′Φ in band form.
        let mut ptp = Band::zeros(nb, p);
        for (start, vals) in &phi.rows {
            for (i, &vi) in vals.iter().enumerate() {
                for (j, &vj) in vals.iter().enumerate() {
                    ptp.add(start + i, start + j, vi * vj);
                }
            }
        }
        let mut m = ptp.scaled_add(&r, lambda);
        let chol = match BandCholesky::new(&m) {
            Some(c) => c,
            None => {
                let jitter = JITTER_RTOL * m.trace();
                for i in 0..nb {
                    m.add(i, i, jitter);
                }
                BandCholesky::new(&m).ok_or(IdentError::IllConditionedBasis {
                    cond: f64::INFINITY,
                })?
            }
        };
        let cond = condition_estimate(&m, &chol);
        if !(cond <= MAX_BASIS_COND) {
            return Err(IdentError::IllConditionedBasis { cond });
        }
        Ok(SplineFactor {
            basis,
            lambda,
            phi,
            jphi,
            g,
            r,
            chol,
            cond,
        })
    }

    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    pub fn basis_size(&self) -> usize {
        self.basis.size
    }

    /// Fitted coefficients `Ĉ = X H` (rows of `X` are curves sampled on the grid).
    pub fn coefficients(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve_rows(&self.phi.right_mul(x))
    }

    /// `W H′` for `W` with `B` columns.
    fn times_ht(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        self.phi.right_mul_t(&self.chol.solve_rows(w))
    }

    pub fn apply_s(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.times_ht(&self.jphi.right_mul(&self.coefficients(x)))
    }

    pub fn apply_l(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.times_ht(&self.g.right_mul(&self.coefficients(x)))
    }

    pub fn apply_lt(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.times_ht(&self.g.right_mul_t(&self.coefficients(x)))
    }

    /// Dense `H` (`n × B`).
    pub fn hat(&self) -> DMatrix<f64> {
        self.chol.solve_rows(&self.phi.to_dense().transpose()).transpose()
    }
}
