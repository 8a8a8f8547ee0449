//! Real Jordan canonical form for matrices with (numerically) distinct eigenvalues.
//!
//! `A = Q Λ Q⁻¹` where `Λ` is block diagonal with 1×1 blocks `c` for real eigenvalues and
//! 2×2 blocks `[[a, -b], [b, a]]` (`b > 0`) for complex pairs `a ± bi`. Real blocks come first,
//! sorted ascending; complex pairs follow, sorted by real then imaginary part.
//!
//! Column scaling of `Q`: a real eigenvector has unit norm with its largest-magnitude entry
//! positive. A complex pair stores `(Re v, -Im v)` where `v` is the eigenvector of `a + bi`
//! scaled to `|v| = 1` with its largest-modulus entry real and positive (the LAPACK `geev`
//! convention). Block coefficients, and therefore ICIS, depend on this choice.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{IdentError, Result};
use crate::linalg::{ensure_system, is_symmetric};

pub type C64 = Complex<f64>;

pub const DEFAULT_EIG_TOL: f64 = 1e-8;

/// Relative size (w.r.t. `max(1, |A|_F)`) below which the Schur coupling between two equal
/// eigenvalues is treated as roundoff, i.e. the cluster is diagonalizable.
const COUPLING_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum BlockKind {
    Real { c: f64 },
    ComplexPair { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenBlock {
    pub kind: BlockKind,
    /// First column of `Q` owned by this block (0-based).
    pub column_start: usize,
}

impl EigenBlock {
    pub fn width(&self) -> usize {
        match self.kind {
            BlockKind::Real { .. } => 1,
            BlockKind::ComplexPair { .. } => 2,
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self.kind, BlockKind::Real { .. })
    }

    /// Eigenvalue with nonnegative imaginary part.
    pub fn eigenvalue(&self) -> C64 {
        match self.kind {
            BlockKind::Real { c } => C64::new(c, 0.0),
            BlockKind::ComplexPair { a, b } => C64::new(a, b),
        }
    }

    /// The block `J_k`.
    pub fn jordan_block(&self) -> DMatrix<f64> {
        match self.kind {
            BlockKind::Real { c } => DMatrix::from_element(1, 1, c),
            BlockKind::ComplexPair { a, b } => DMatrix::from_row_slice(2, 2, &[a, -b, b, a]),
        }
    }

    pub fn columns(&self) -> std::ops::Range<usize> {
        self.column_start..self.column_start + self.width()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealJordanForm {
    pub q: DMatrix<f64>,
    pub qinv: DMatrix<f64>,
    pub blocks: Vec<EigenBlock>,
    pub k1: usize,
    pub k2: usize,
}

impl RealJordanForm {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Assembles a form from an explicit basis and block list (blocks laid out left to right
    /// in the given order, each owning `width` consecutive columns of `q`).
    pub fn from_parts(q: DMatrix<f64>, kinds: &[BlockKind]) -> Result<Self> {
        let d = ensure_system(&q)?;
        let mut blocks = Vec::with_capacity(kinds.len());
        let mut col = 0;
        for &kind in kinds {
            if let BlockKind::ComplexPair { b, .. } = kind {
                if b <= 0.0 {
                    return Err(IdentError::InvalidParameter(
                        "complex pair needs b > 0".into(),
                    ));
                }
            }
            let blk = EigenBlock {
                kind,
                column_start: col,
            };
            col += blk.width();
            blocks.push(blk);
        }
        if col != d {
            return Err(IdentError::DimensionMismatch(format!(
                "blocks cover {col} columns, basis has {d}"
            )));
        }
        let qinv = q.clone().try_inverse().ok_or(IdentError::DefectiveBlock)?;
        let k1 = blocks.iter().filter(|b| b.is_real()).count();
        let k2 = blocks.len() - k1;
        Ok(RealJordanForm {
            q,
            qinv,
            blocks,
            k1,
            k2,
        })
    }


    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Block-diagonal `Λ`.
    pub fn lambda(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for blk in &self.blocks {
            let s = blk.column_start;
            let w = blk.width();
            m.view_mut((s, s), (w, w)).copy_from(&blk.jordan_block());
        }
        m
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.q * self.lambda() * &self.qinv
    }

    /// `k(i)`: block owning dimension `i` (0-based).
    pub fn block_of_dim(&self, i: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.columns().contains(&i))
            .expect("dimension within range")
    }

    /// `i(k)`: first dimension of block `k` (0-based).
    pub fn first_dim_of_block(&self, k: usize) -> usize {
        self.blocks[k].column_start
    }

    /// One eigenvalue per column: `c`, or `a + bi` followed by `a - bi`.
    pub fn eigenvalues(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.dim());
        for blk in &self.blocks {
            match blk.kind {
                BlockKind::Real { c } => out.push(C64::new(c, 0.0)),
                BlockKind::ComplexPair { a, b } => {
                    out.push(C64::new(a, b));
                    out.push(C64::new(a, -b));
                }
            }
        }
        out
    }

    /// Groups of block indices whose eigenvalues coincide within `tol * max(1, spectral radius)`.
    /// Only groups with at least two members are returned.
    pub fn repeated_groups(&self, tol: f64) -> Vec<Vec<usize>> {
        let rho = self
            .blocks
            .iter()
            .map(|b| b.eigenvalue().norm())
            .fold(0.0, f64::max);
        let thr = tol * rho.max(1.0);
        let mut assigned = vec![false; self.blocks.len()];
        let mut groups = Vec::new();
        for i in 0..self.blocks.len() {
            if assigned[i] {
                continue;
            }
            let mut g = vec![i];
            for j in i + 1..self.blocks.len() {
                if !assigned[j]
                    && self.blocks[i].is_real() == self.blocks[j].is_real()
                    && (self.blocks[i].eigenvalue() - self.blocks[j].eigenvalue()).norm() < thr
                {
                    g.push(j);
                    assigned[j] = true;
                }
            }
            if g.len() > 1 {
                groups.push(g);
            }
        }
        groups
    }

    pub fn to_json(&self) -> RealJordanFormJson {
        RealJordanFormJson {
            q: rows_of(&self.q),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockJson {
                    kind: b.kind,
                    column_start: b.column_start,
                })
                .collect(),
            k1: self.k1,
            k2: self.k2,
        }
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Wire form: `{Q: [[...]], blocks: [{kind, c|a,b, column_start}], K1, K2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealJordanFormJson {
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub blocks: Vec<BlockJson>,
    #[serde(rename = "K1")]
    pub k1: usize,
    #[serde(rename = "K2")]
    pub k2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockJson {
    #[serde(flatten)]
    pub kind: BlockKind,
    pub column_start: usize,
}

/// Options for [`real_jordan_with`].
#[derive(Debug, Clone, Copy)]
pub struct JordanOptions {
    pub eig_tol: f64,
    /// Accept repeated eigenvalues as long as each repeated cluster is diagonalizable.
    pub allow_repeated: bool,
}

impl Default for JordanOptions {
    fn default() -> Self {
        JordanOptions {
            eig_tol: DEFAULT_EIG_TOL,
            allow_repeated: false,
        }
    }
}

pub fn real_jordan(a: &DMatrix<f64>, eig_tol: f64) -> Result<RealJordanForm> {
    real_jordan_with(
        a,
        JordanOptions {
            eig_tol,
            allow_repeated: false,
        },
    )
}

/// Like [`real_jordan`] but keeps going through diagonalizable repeated eigenvalues.
pub fn real_jordan_allow_repeated(a: &DMatrix<f64>, eig_tol: f64) -> Result<RealJordanForm> {
    real_jordan_with(
        a,
        JordanOptions {
            eig_tol,
            allow_repeated: true,
        },
    )
}

struct RawEigen {
    value: C64,
    vector: DVector<C64>,
}

pub fn real_jordan_with(a: &DMatrix<f64>, opts: JordanOptions) -> Result<RealJordanForm> {
    let d = ensure_system(a)?;
    let symmetric = is_symmetric(a, 1e-13);
    let raw = if symmetric {
        symmetric_eigen(a)
    } else {
        schur_eigen(a, opts)?
    };

    let all: Vec<C64> = raw
        .iter()
        .flat_map(|e| {
            if e.value.im > 0.0 {
                vec![e.value, e.value.conj()]
            } else {
                vec![e.value]
            }
        })
        .collect();
    debug_assert_eq!(all.len(), d);
    let pairs = close_pairs(&all, opts.eig_tol);
    if !pairs.is_empty() && !opts.allow_repeated {
        return Err(IdentError::RepeatedEigenvalues { pairs });
    }

    let (mut reals, mut complexes): (Vec<RawEigen>, Vec<RawEigen>) =
        raw.into_iter().partition(|e| e.value.im == 0.0);
    reals.sort_by(|x, y| x.value.re.total_cmp(&y.value.re));
    complexes.sort_by(|x, y| {
        x.value
            .re
            .total_cmp(&y.value.re)
            .then(x.value.im.total_cmp(&y.value.im))
    });

    let mut q = DMatrix::zeros(d, d);
    let mut blocks = Vec::with_capacity(reals.len() + complexes.len());
    let mut col = 0;
    for e in &reals {
        let v = e.vector.map(|z| z.re);
        q.set_column(col, &v);
        blocks.push(EigenBlock {
            kind: BlockKind::Real { c: e.value.re },
            column_start: col,
        });
        col += 1;
    }
    for e in &complexes {
        q.set_column(col, &e.vector.map(|z| z.re));
        q.set_column(col + 1, &e.vector.map(|z| -z.im));
        blocks.push(EigenBlock {
            kind: BlockKind::ComplexPair {
                a: e.value.re,
                b: e.value.im,
            },
            column_start: col,
        });
        col += 2;
    }
    let qinv = if symmetric {
        q.transpose()
    } else {
        q.clone().try_inverse().ok_or(IdentError::DefectiveBlock)?
    };
    if qinv.iter().any(|v| !v.is_finite()) {
        return Err(IdentError::DefectiveBlock);
    }
    Ok(RealJordanForm {
        q,
        qinv,
        k1: reals.len(),
        k2: complexes.len(),
        blocks,
    })
}

fn spectral_radius(vals: &[C64]) -> f64 {
    vals.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn close_pairs(vals: &[C64], tol: f64) -> Vec<(usize, usize)> {
    let thr = tol * spectral_radius(vals).max(1.0);
    let mut pairs = Vec::new();
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            if (vals[i] - vals[j]).norm() < thr {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

fn symmetric_eigen(a: &DMatrix<f64>) -> Vec<RawEigen> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    (0..a.nrows())
        .map(|k| {
            let v = normalize_real(eig.eigenvectors.column(k).into_owned());
            RawEigen {
                value: C64::new(eig.eigenvalues[k], 0.0),
                vector: v.map(|x| C64::new(x, 0.0)),
            }
        })
        .collect()
}

fn normalize_real(mut v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 0.0 {
        v /= n;
    }
    let imax = v.iamax();
    if v[imax] < 0.0 {
        v = -v;
    }
    v
}

fn normalize_complex(mut v: DVector<C64>) -> DVector<C64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        v /= C64::new(n, 0.0);
    }
    let imax = (0..v.len())
        .max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm()))
        .unwrap_or(0);
    let m = v[imax].norm();
    if m > 0.0 {
        let phase = v[imax].conj() / m;
        v *= phase;
        v[imax] = C64::new(v[imax].re, 0.0);
    }
    v
}

/// Diagonal blocks (start, size) of a quasi-upper-triangular matrix.
fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let d = t.nrows();
    let mut out = Vec::new();
    let mut i = 0;
    while i < d {
        if i + 1 < d {
            let sub = t[(i + 1, i)].abs();
            let scale = t[(i, i)].abs() + t[(i + 1, i + 1)].abs();
            if sub > f64::EPSILON * scale.max(f64::MIN_POSITIVE) && sub != 0.0 {
                out.push((i, 2));
                i += 2;
                continue;
            }
        }
        out.push((i, 1));
        i += 1;
    }
    out
}

fn eig2(t: &DMatrix<f64>, s: usize) -> (C64, C64) {
    let (p, q, r, u) = (t[(s, s)], t[(s, s + 1)], t[(s + 1, s)], t[(s + 1, s + 1)]);
    let half_tr = 0.5 * (p + u);
    let disc = 0.25 * (p - u) * (p - u) + q * r;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        (C64::new(half_tr - sq, 0.0), C64::new(half_tr + sq, 0.0))
    } else {
        let sq = (-disc).sqrt();
        (C64::new(half_tr, sq), C64::new(half_tr, -sq))
    }
}

const SCHUR_SWEEPS_PER_DIM: usize = 200;

fn real_schur(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let cap = SCHUR_SWEEPS_PER_DIM * a.nrows().max(1);
    a.clone()
        .try_schur(f64::EPSILON, cap)
        .map(|s| s.unpack())
        .ok_or_else(|| IdentError::DegenerateInput("Schur iteration did not converge".into()))
}

fn schur_eigen(a: &DMatrix<f64>, opts: JordanOptions) -> Result<Vec<RawEigen>> {
    let d = a.nrows();
    let (u, t) = real_schur(a)?;
    let blocks = diagonal_blocks(&t);
    let mut targets: Vec<(C64, usize)> = Vec::with_capacity(d);
    for (bi, &(s, w)) in blocks.iter().enumerate() {
        if w == 1 {
            targets.push((C64::new(t[(s, s)], 0.0), bi));
        } else {
            let (l1, l2) = eig2(&t, s);
            if l1.im == 0.0 {
                targets.push((l1, bi));
                targets.push((l2, bi));
            } else {
                targets.push((if l1.im > 0.0 { l1 } else { l2 }, bi));
            }
        }
    }
    let all: Vec<C64> = targets
        .iter()
        .flat_map(|(z, _)| if z.im > 0.0 { vec![*z, z.conj()] } else { vec![*z] })
        .collect();
    let rho = spectral_radius(&all);
    let sing_tol = opts.eig_tol * rho.max(1.0);
    let coupling_tol = COUPLING_RTOL * a.norm().max(1.0);

    let uc = u.map(|x| C64::new(x, 0.0));
    let mut out = Vec::with_capacity(targets.len());
    for (mu, bi) in targets {
        let y = back_substitute(&t, &blocks, bi, mu, sing_tol, coupling_tol, opts.allow_repeated)?;
        let v = &uc * y;
        let v = if mu.im == 0.0 {
            normalize_real(v.map(|z| z.re)).map(|x| C64::new(x, 0.0))
        } else {
            normalize_complex(v)
        };
        out.push(RawEigen { value: mu, vector: v });
    }
    Ok(out)
}

fn null_vector_2x2(m: [[C64; 2]; 2]) -> [C64; 2] {
    // Pick the better-conditioned row to build the null vector.
    let r0 = m[0][0].norm() + m[0][1].norm();
    let r1 = m[1][0].norm() + m[1][1].norm();
    if r0 >= r1 && r0 > 0.0 {
        [m[0][1], -m[0][0]]
    } else if r1 > 0.0 {
        [m[1][1], -m[1][0]]
    } else {
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
    }
}

/// Solves `(T - mu I) y = 0` with `y` supported on blocks `0..=target`.
fn back_substitute(
    t: &DMatrix<f64>,
    blocks: &[(usize, usize)],
    target: usize,
    mu: C64,
    sing_tol: f64,
    coupling_tol: f64,
    allow_repeated: bool,
) -> Result<DVector<C64>> {
    let d = t.nrows();
    let tc = |i: usize, j: usize| C64::new(t[(i, j)], 0.0);
    let mut y = DVector::from_element(d, C64::new(0.0, 0.0));
    let (ts, tw) = blocks[target];
    if tw == 1 {
        y[ts] = C64::new(1.0, 0.0);
    } else {
        let m = [
            [tc(ts, ts) - mu, tc(ts, ts + 1)],
            [tc(ts + 1, ts), tc(ts + 1, ts + 1) - mu],
        ];
        let z = null_vector_2x2(m);
        y[ts] = z[0];
        y[ts + 1] = z[1];
    }
    let end = ts + tw;
    for bj in (0..target).rev() {
        let (s, w) = blocks[bj];
        let mut rhs = [C64::new(0.0, 0.0); 2];
        for r in 0..w {
            let mut acc = C64::new(0.0, 0.0);
            for c in s + w..end {
                acc += tc(s + r, c) * y[c];
            }
            rhs[r] = -acc;
        }
        let rhs_norm = rhs.iter().map(|z| z.norm()).sum::<f64>();
        if w == 1 {
            let denom = tc(s, s) - mu;
            if denom.norm() < sing_tol {
                if allow_repeated {
                    if rhs_norm <= coupling_tol {
                        y[s] = C64::new(0.0, 0.0);
                        continue;
                    }
                    return Err(IdentError::DefectiveBlock);
                }
                let fallback = if denom.norm() > 0.0 {
                    denom / denom.norm() * sing_tol
                } else {
                    C64::new(sing_tol, 0.0)
                };
                y[s] = rhs[0] / fallback;
            } else {
                y[s] = rhs[0] / denom;
            }
        } else {
            let m00 = tc(s, s) - mu;
            let m01 = tc(s, s + 1);
            let m10 = tc(s + 1, s);
            let m11 = tc(s + 1, s + 1) - mu;
            let det = m00 * m11 - m01 * m10;
            let fro = (m00.norm_sqr() + m01.norm_sqr() + m10.norm_sqr() + m11.norm_sqr()).sqrt();
            let smin = if fro > 0.0 { det.norm() / fro } else { 0.0 };
            if smin < sing_tol {
                if allow_repeated && rhs_norm <= coupling_tol {
                    y[s] = C64::new(0.0, 0.0);
                    y[s + 1] = C64::new(0.0, 0.0);
                    continue;
                }
                if allow_repeated {
                    return Err(IdentError::DefectiveBlock);
                }
            }
            let det = if det.norm() == 0.0 {
                C64::new(sing_tol * sing_tol, 0.0)
            } else {
                det
            };
            y[s] = (rhs[0] * m11 - m01 * rhs[1]) / det;
            y[s + 1] = (m00 * rhs[1] - m10 * rhs[0]) / det;
        }
    }
    Ok(y)
}

/// Concatenated `Q` columns of the selected blocks (ascending block order).
pub fn invariant_subspace_basis(jf: &RealJordanForm, block_set: &[usize]) -> Result<DMatrix<f64>> {
    if block_set.is_empty() {
        return Err(IdentError::EmptyBlockSet);
    }
    let mut ks: Vec<usize> = block_set.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if let Some(&bad) = ks.iter().find(|&&k| k >= jf.blocks.len()) {
        return Err(IdentError::IndexOutOfRange {
            index: bad,
            len: jf.blocks.len(),
        });
    }
    let cols: Vec<usize> = ks.iter().flat_map(|&k| jf.blocks[k].columns()).collect();
    Ok(jf.q.select_columns(cols.iter()))
}

/// Eigenvalues of `A` (complex plane, conjugates included).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    ensure_system(a)?;
    if is_symmetric(a, 1e-13) {
        let sym = (a + a.transpose()) * 0.5;
        return Ok(sym
            .symmetric_eigenvalues()
            .iter()
            .map(|&x| C64::new(x, 0.0))
            .collect());
    }
    let (_, t) = real_schur(a)?;
    let mut out = Vec::with_capacity(a.nrows());
    for (s, w) in diagonal_blocks(&t) {
        if w == 1 {
            out.push(C64::new(t[(s, s)], 0.0));
        } else {
            let (l1, l2) = eig2(&t, s);
            out.push(l1);
            out.push(l2);
        }
    }
    Ok(out)
}

/// Smallest distance between two eigenvalues; `+inf` for a 1×1 matrix.
pub fn min_eigen_gap(a: &DMatrix<f64>) -> Result<f64> {
    let vals = eigenvalues(a)?;
    let mut best = f64::INFINITY;
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            best = best.min((vals[i] - vals[j]).norm());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_3d() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -1.0, 2.0, 0.0, 0.0, 3.0, 1.0, 0.0])
    }

    #[test]
    fn three_dim_example_blocks_and_q() {
        let a = example_3d();
        let jf = real_jordan(&a, DEFAULT_EIG_TOL).unwrap();
        assert_eq!((jf.k1, jf.k2), (1, 1));
        match jf.blocks[0].kind {
            BlockKind::Real { c } => assert!((c + 1.0).abs() < 1e-12),
            _ => panic!("first block must be real"),
        }
        match jf.blocks[1].kind {
            BlockKind::ComplexPair { a, b } => {
                assert!((a - 0.5).abs() < 1e-12);
                assert!((b - 7f64.sqrt() / 2.0).abs() < 1e-12);
            }
            _ => panic!("second block must be complex"),
        }
        // Q as printed for this system, up to the sign of the real column and of the
        // third column (opposite orientation convention for the rotation block).
        let s7 = 7f64.sqrt();
        let s10 = 10f64.sqrt();
        let want = DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0 / 6f64.sqrt(),
                0.0,
                -1.0 / s10,
                -2.0 / 6f64.sqrt(),
                s7 / (2.0 * s10),
                -0.5 / s10,
                -1.0 / 6f64.sqrt(),
                s7 / s10,
                0.0,
            ],
        );
        let mut q = jf.q.clone();
        if q[(1, 0)] > 0.0 {
            q.column_mut(0).neg_mut();
        }
        assert!((q - want).norm() < 1e-12, "{}", jf.q);
        assert!((jf.reconstruct() - &a).norm() < 1e-12);
    }

    #[test]
    fn diagonal_sorted_ascending() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        let jf = real_jordan(&a, DEFAULT_EIG_TOL).unwrap();
        assert_eq!(jf.blocks[0].kind, BlockKind::Real { c: -2.0 });
        assert_eq!(jf.blocks[1].kind, BlockKind::Real { c: -1.0 });
        let want = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((&jf.q - want).norm() < 1e-14);
    }

    #[test]
    fn rotated_two_dim_example() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.875, 2.382, 2.382, -4.625]);
        let jf = real_jordan(&a, DEFAULT_EIG_TOL).unwrap();
        let c0 = match jf.blocks[0].kind {
            BlockKind::Real { c } => c,
            _ => unreachable!(),
        };
        let c1 = match jf.blocks[1].kind {
            BlockKind::Real { c } => c,
            _ => unreachable!(),
        };
        // The printed entries are rounded to three decimals.
        assert!((c0 + 6.0).abs() < 2e-3 && (c1 + 0.5).abs() < 2e-3);
        let s3 = 3f64.sqrt() / 2.0;
        let q0 = jf.q.column(0);
        let q1 = jf.q.column(1);
        assert!((q0[0].abs() - 0.5).abs() < 1e-3 && (q0[1].abs() - s3).abs() < 1e-3);
        assert!((q1[0].abs() - s3).abs() < 1e-3 && (q1[1].abs() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn repeated_eigenvalues_rejected_unless_allowed() {
        let a = DMatrix::<f64>::identity(2, 2);
        match real_jordan(&a, DEFAULT_EIG_TOL) {
            Err(IdentError::RepeatedEigenvalues { pairs }) => assert_eq!(pairs, vec![(0, 1)]),
            other => panic!("unexpected {other:?}"),
        }
        let jf = real_jordan_allow_repeated(&a, DEFAULT_EIG_TOL).unwrap();
        assert!((jf.reconstruct() - a).norm() < 1e-14);
        assert_eq!(jf.repeated_groups(DEFAULT_EIG_TOL), vec![vec![0, 1]]);
    }

    #[test]
    fn defective_block_detected() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, -1.0]);
        assert_eq!(
            real_jordan_allow_repeated(&a, DEFAULT_EIG_TOL),
            Err(IdentError::DefectiveBlock)
        );
    }

    #[test]
    fn non_finite_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert_eq!(real_jordan(&a, DEFAULT_EIG_TOL), Err(IdentError::NonFinite));
        assert_eq!(min_eigen_gap(&a), Err(IdentError::NonFinite));
    }

    #[test]
    fn subspace_basis_selection() {
        let jf = real_jordan(&example_3d(), DEFAULT_EIG_TOL).unwrap();
        let b = invariant_subspace_basis(&jf, &[1]).unwrap();
        assert_eq!(b.ncols(), 2);
        assert_eq!(b.column(0), jf.q.column(1));
        let full = invariant_subspace_basis(&jf, &[0, 1]).unwrap();
        assert!(full.clone().try_inverse().is_some());
        assert!(matches!(
            invariant_subspace_basis(&jf, &[2]),
            Err(IdentError::IndexOutOfRange { index: 2, len: 2 })
        ));
        assert_eq!(invariant_subspace_basis(&jf, &[]), Err(IdentError::EmptyBlockSet));
        let one = real_jordan(&DMatrix::from_element(1, 1, 5.0), DEFAULT_EIG_TOL).unwrap();
        let b1 = invariant_subspace_basis(&one, &[0]).unwrap();
        assert_eq!(b1[(0, 0)].abs(), 1.0);
    }

    #[test]
    fn eigen_gaps() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 4.0]));
        assert!((min_eigen_gap(&a).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(min_eigen_gap(&DMatrix::identity(2, 2)).unwrap(), 0.0);
        assert!((min_eigen_gap(&example_3d()).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn index_maps() {
        let jf = real_jordan(&example_3d(), DEFAULT_EIG_TOL).unwrap();
        assert_eq!(jf.block_of_dim(0), 0);
        assert_eq!(jf.block_of_dim(1), 1);
        assert_eq!(jf.block_of_dim(2), 1);
        assert_eq!(jf.first_dim_of_block(1), 1);
    }

    #[test]
    fn json_shape() {
        let jf = real_jordan(&example_3d(), DEFAULT_EIG_TOL).unwrap();
        let v = serde_json::to_value(jf.to_json()).unwrap();
        assert_eq!(v["K1"], 1);
        assert_eq!(v["K2"], 1);
        assert_eq!(v["blocks"][0]["kind"], "Real");
        assert_eq!(v["blocks"][1]["kind"], "ComplexPair");
        assert_eq!(v["blocks"][1]["column_start"], 1);
        assert!(v["blocks"][1]["b"].as_f64().unwrap() > 0.0);
        assert_eq!(v["Q"].as_array().unwrap().len(), 3);
    }
}
