//! Identifiability from a single trajectory: block coefficients, the ICIS, and the classes of
//! system matrices that reproduce the same trajectory.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{IdentError, Result};
use crate::linalg::{
    ensure_finite, ensure_finite_vec, ensure_system, kron, numerical_rank, vec_col_major, RANK_RTOL,
};
use crate::realjordan::{
    min_eigen_gap, real_jordan, real_jordan_allow_repeated, eigenvalues, RealJordanForm,
};

pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
pub const DEFAULT_ICIS_TOL: f64 = 1e-8;

/// Coefficient of `x₀` on one block of the real Jordan basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockCoefficient {
    Real(f64),
    Complex([f64; 2]),
}

impl BlockCoefficient {
    pub fn magnitude(&self) -> f64 {
        match *self {
            BlockCoefficient::Real(c) => c.abs(),
            BlockCoefficient::Complex([a, b]) => a.hypot(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockCoefficients {
    pub w0: Vec<BlockCoefficient>,
    pub magnitudes: Vec<f64>,
    pub icis: f64,
    /// `Q⁻¹ x₀`.
    pub x_tilde: Vec<f64>,
}

fn check_x0(d: usize, x0: &DVector<f64>) -> Result<()> {
    if x0.len() != d {
        return Err(IdentError::DimensionMismatch(format!(
            "x0 has length {}, system has dimension {d}",
            x0.len()
        )));
    }
    ensure_finite_vec(x0)
}

pub fn block_coefficients(jf: &RealJordanForm, x0: &DVector<f64>) -> Result<BlockCoefficients> {
    check_x0(jf.dim(), x0)?;
    let xt = &jf.qinv * x0;
    let w0: Vec<BlockCoefficient> = jf
        .blocks
        .iter()
        .map(|b| {
            let s = b.column_start;
            if b.is_real() {
                BlockCoefficient::Real(xt[s])
            } else {
                BlockCoefficient::Complex([xt[s], xt[s + 1]])
            }
        })
        .collect();
    let magnitudes: Vec<f64> = w0.iter().map(|w| w.magnitude()).collect();
    let icis = magnitudes.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BlockCoefficients {
        w0,
        magnitudes,
        icis,
        x_tilde: xt.iter().copied().collect(),
    })
}

/// ICIS of `(A, x₀)`; `A` must have distinct eigenvalues.
pub fn icis(a: &DMatrix<f64>, x0: &DVector<f64>, eig_tol: f64) -> Result<f64> {
    let jf = real_jordan(a, eig_tol)?;
    Ok(block_coefficients(&jf, x0)?.icis)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    Identifiable { icis: f64 },
    UnidentifiableInitialCondition { icis: f64 },
    UnidentifiableRepeatedEigen { gap: f64 },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Identifiable { .. } => "Identifiable",
            Verdict::UnidentifiableInitialCondition { .. } => "UnidentifiableInitialCondition",
            Verdict::UnidentifiableRepeatedEigen { .. } => "UnidentifiableRepeatedEigen",
        }
    }

    pub fn is_identifiable(&self) -> bool {
        matches!(self, Verdict::Identifiable { .. })
    }
}

/// Gap below which eigenvalues are treated as repeated (relative to the spectral radius).
fn repeated_threshold(a: &DMatrix<f64>, eig_tol: f64) -> Result<f64> {
    let rho = eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(eig_tol * rho.max(1.0))
}

pub fn is_identifiable(
    a: &DMatrix<f64>,
    x0: &DVector<f64>,
    icis_tol: f64,
    eig_tol: f64,
) -> Result<Verdict> {
    let d = ensure_system(a)?;
    check_x0(d, x0)?;
    let gap = min_eigen_gap(a)?;
    if gap < repeated_threshold(a, eig_tol)? {
        return Ok(Verdict::UnidentifiableRepeatedEigen { gap });
    }
    let norm = x0.norm();
    if norm == 0.0 {
        return Err(IdentError::ZeroInitialCondition);
    }
    let jf = real_jordan(a, eig_tol)?;
    let bc = block_coefficients(&jf, x0)?;
    if bc.icis > icis_tol * norm {
        Ok(Verdict::Identifiable { icis: bc.icis })
    } else {
        Ok(Verdict::UnidentifiableInitialCondition { icis: bc.icis })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassKind {
    InvariantSubspace,
    RepeatedEigen,
}

/// Affine family `B(D) = A + V (U D U′) W` of matrices sharing one trajectory.
///
/// For the invariant-subspace kind `V = Q I₀`, `W = I₀ Q⁻¹` restricted to the flagged
/// dimensions and `U = I`. For the repeated-eigenvalue kind `V`, `W` are the columns of `P`
/// and rows of `P⁻¹` belonging to the repeated group and `U` is orthogonal to the group's
/// coordinates of `x₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnidentifiableClass {
    pub kind: ClassKind,
    pub base: DMatrix<f64>,
    /// `Q` (or `P`).
    pub q: DMatrix<f64>,
    /// `Q⁻¹` (or `P⁻¹`).
    pub qinv: DMatrix<f64>,
    /// Diagonal of `I₀` (invariant-subspace kind).
    pub i0: Option<Vec<u8>>,
    /// Semi-orthogonal `U` (repeated-eigenvalue kind).
    pub u: Option<DMatrix<f64>>,
    /// First column of the repeated group inside `P` (repeated-eigenvalue kind).
    pub block_offset: usize,
    /// Blocks whose coefficient vanished (invariant-subspace) or the repeated group.
    pub blocks: Vec<usize>,
    /// Side of the free-parameter matrix `D`.
    pub free_size: usize,
    pub dof: usize,
    /// Real Jordan blocks of `A` restricted to the flagged dimensions.
    jordan_part: DMatrix<f64>,
    left: DMatrix<f64>,
    right: DMatrix<f64>,
}

impl UnidentifiableClass {
    /// `B(D)`; `D` is either `free_size × free_size` or, for the invariant-subspace kind,
    /// a full `d × d` matrix of which only the `I₀ D I₀` part is used.
    pub fn member(&self, dmat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let core = self.core(dmat)?;
        Ok(&self.base + &self.left * core * &self.right)
    }

    /// Member in the "replacing" reading: the Jordan content of the flagged dimensions is
    /// replaced by `D` instead of being shifted by it, so `D` equal to those Jordan blocks
    /// gives back `A` and `D = 0` removes their dynamics.
    pub fn member_replacing(&self, dmat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let core = self.core(dmat)? - &self.jordan_part;
        Ok(&self.base + &self.left * core * &self.right)
    }

    fn core(&self, dmat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        ensure_finite(dmat)?;
        let k = self.free_size;
        let d = self.base.nrows();
        let dsmall = if dmat.shape() == (k, k) {
            dmat.clone()
        } else if self.kind == ClassKind::InvariantSubspace && dmat.shape() == (d, d) {
            let idx = self.flagged_dims();
            dmat.select_rows(idx.iter()).select_columns(idx.iter())
        } else {
            return Err(IdentError::DimensionMismatch(format!(
                "free parameter must be {k}x{k}, got {}x{}",
                dmat.nrows(),
                dmat.ncols()
            )));
        };
        Ok(match &self.u {
            Some(u) => u * dsmall * u.transpose(),
            None => dsmall,
        })
    }

    fn flagged_dims(&self) -> Vec<usize> {
        match &self.i0 {
            Some(diag) => (0..diag.len()).filter(|&i| diag[i] == 1).collect(),
            None => (self.block_offset..self.block_offset + self.left.ncols()).collect(),
        }
    }

    /// `Q I₀ ⊗`-style map from `vec(D_small)` to `vec(B(D) − A)`.
    pub fn parameter_map(&self) -> DMatrix<f64> {
        let u = self
            .u
            .clone()
            .unwrap_or_else(|| DMatrix::identity(self.free_size, self.free_size));
        let lu = &self.left * &u;
        let ru = u.transpose() * &self.right;
        kron(&ru.transpose(), &lu)
    }

    pub fn i0_matrix(&self) -> Option<DMatrix<f64>> {
        self.i0.as_ref().map(|diag| {
            DMatrix::from_diagonal(&DVector::from_iterator(
                diag.len(),
                diag.iter().map(|&x| x as f64),
            ))
        })
    }
}

fn jordan_restricted(jf: &RealJordanForm, dims: &[usize]) -> DMatrix<f64> {
    jf.lambda().select_rows(dims.iter()).select_columns(dims.iter())
}

pub fn unidentifiable_class(
    jf: &RealJordanForm,
    base: &DMatrix<f64>,
    x0: &DVector<f64>,
    zero_tol: f64,
) -> Result<UnidentifiableClass> {
    let d = jf.dim();
    if base.shape() != (d, d) {
        return Err(IdentError::DimensionMismatch(
            "base matrix does not match the Jordan form".into(),
        ));
    }
    check_x0(d, x0)?;
    let norm = x0.norm();
    if norm == 0.0 {
        return Err(IdentError::ZeroInitialCondition);
    }
    let bc = block_coefficients(jf, x0)?;
    let zero_blocks: Vec<usize> = (0..bc.magnitudes.len())
        .filter(|&k| bc.magnitudes[k] <= zero_tol * norm)
        .collect();
    if zero_blocks.is_empty() {
        return Err(IdentError::FullyIdentifiable);
    }
    let mut i0 = vec![0u8; d];
    for &k in &zero_blocks {
        for c in jf.blocks[k].columns() {
            i0[c] = 1;
        }
    }
    let dims: Vec<usize> = (0..d).filter(|&i| i0[i] == 1).collect();
    let d0 = dims.len();
    Ok(UnidentifiableClass {
        kind: ClassKind::InvariantSubspace,
        base: base.clone(),
        q: jf.q.clone(),
        qinv: jf.qinv.clone(),
        i0: Some(i0),
        u: None,
        block_offset: 0,
        blocks: zero_blocks,
        free_size: d0,
        dof: d0 * d0,
        jordan_part: jordan_restricted(jf, &dims),
        left: jf.q.select_columns(dims.iter()),
        right: jf.qinv.select_rows(dims.iter()),
    })
}

/// Convenience wrapper: decomposes `A` and builds its class at `x₀`.
pub fn unidentifiable_class_of(
    a: &DMatrix<f64>,
    x0: &DVector<f64>,
    zero_tol: f64,
    eig_tol: f64,
) -> Result<UnidentifiableClass> {
    let jf = real_jordan(a, eig_tol)?;
    unidentifiable_class(&jf, a, x0, zero_tol)
}

pub fn class_member(class: &UnidentifiableClass, dmat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    class.member(dmat)
}

pub fn class_member_replacing(
    class: &UnidentifiableClass,
    dmat: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    class.member_replacing(dmat)
}

/// Trailing columns of a full orthogonal factor of `[vs | I]`; the result spans the orthogonal
/// complement of `span(vs)` when `vs` has full column rank.
fn orthogonal_complement(vs: &DMatrix<f64>) -> DMatrix<f64> {
    let m = vs.nrows();
    let r = vs.ncols();
    let mut aug = DMatrix::zeros(m, r + m);
    aug.view_mut((0, 0), (m, r)).copy_from(vs);
    aug.view_mut((0, r), (m, m)).copy_from(&DMatrix::identity(m, m));
    let q = aug.qr().q();
    q.columns(r, m - r).into_owned()
}

/// One class per group of repeated eigenvalues.
pub fn repeated_eigen_classes(
    a: &DMatrix<f64>,
    x0: &DVector<f64>,
    eig_tol: f64,
) -> Result<Vec<UnidentifiableClass>> {
    let d = ensure_system(a)?;
    check_x0(d, x0)?;
    let jf = real_jordan_allow_repeated(a, eig_tol)?;
    let groups = jf.repeated_groups(eig_tol);
    if groups.is_empty() {
        return Err(IdentError::NoRepeatedEigenvalue);
    }
    let xt = &jf.qinv * x0;
    let mut out = Vec::with_capacity(groups.len());
    for group in groups {
        let dims: Vec<usize> = group.iter().flat_map(|&k| jf.blocks[k].columns()).collect();
        let w = dims.len();
        let v = DVector::from_iterator(w, dims.iter().map(|&i| xt[i]));
        let real = jf.blocks[group[0]].is_real();
        let u = if v.norm() == 0.0 {
            DMatrix::identity(w, w)
        } else if real {
            orthogonal_complement(&DMatrix::from_columns(std::slice::from_ref(&v)))
        } else {
            // v̄ = (I_m ⊗ [[0,-1],[1,0]]) v
            let mut vbar = DVector::zeros(w);
            for p in 0..w / 2 {
                vbar[2 * p] = -v[2 * p + 1];
                vbar[2 * p + 1] = v[2 * p];
            }
            orthogonal_complement(&DMatrix::from_columns(&[v.clone(), vbar]))
        };
        let k = u.ncols();
        out.push(UnidentifiableClass {
            kind: ClassKind::RepeatedEigen,
            base: a.clone(),
            q: jf.q.clone(),
            qinv: jf.qinv.clone(),
            i0: None,
            block_offset: dims[0],
            blocks: group,
            free_size: k,
            dof: k * k,
            jordan_part: u.transpose() * jordan_restricted(&jf, &dims) * &u,
            left: jf.q.select_columns(dims.iter()),
            right: jf.qinv.select_rows(dims.iter()),
            u: Some(u),
        });
    }
    Ok(out)
}

/// Class of the first repeated group (lowest eigenvalue in the block ordering).
pub fn repeated_eigen_class(
    a: &DMatrix<f64>,
    x0: &DVector<f64>,
    eig_tol: f64,
) -> Result<UnidentifiableClass> {
    Ok(repeated_eigen_classes(a, x0, eig_tol)?.remove(0))
}

/// Linear constraints `S vec(A − A₀) = 0` on the system matrix (column-major `vec`).
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePrior {
    pub s: DMatrix<f64>,
    pub a0: DMatrix<f64>,
}

impl AffinePrior {
    /// Pins the listed `(row, col)` entries (0-based) to the matching entries of `a0`.
    pub fn fix_entries(d: usize, entries: &[(usize, usize)], a0: DMatrix<f64>) -> Result<Self> {
        if a0.shape() != (d, d) {
            return Err(IdentError::DimensionMismatch("anchor must be d x d".into()));
        }
        let mut s = DMatrix::zeros(entries.len(), d * d);
        for (r, &(i, j)) in entries.iter().enumerate() {
            if i >= d || j >= d {
                return Err(IdentError::IndexOutOfRange {
                    index: i.max(j),
                    len: d,
                });
            }
            s[(r, j * d + i)] = 1.0;
        }
        Ok(AffinePrior { s, a0 })
    }

    pub fn empty(d: usize) -> Self {
        AffinePrior {
            s: DMatrix::zeros(0, d * d),
            a0: DMatrix::zeros(d, d),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorVerdict {
    Proper { member: DMatrix<f64> },
    CompatibleNonUnique { dof: usize },
    Incompatible,
}

impl PriorVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            PriorVerdict::Proper { .. } => "Proper",
            PriorVerdict::CompatibleNonUnique { .. } => "CompatibleNonUnique",
            PriorVerdict::Incompatible => "Incompatible",
        }
    }
}

pub fn prior_compatibility(
    prior: &AffinePrior,
    class: &UnidentifiableClass,
) -> Result<PriorVerdict> {
    let d = class.base.nrows();
    if prior.s.ncols() != d * d || prior.a0.shape() != (d, d) {
        return Err(IdentError::DimensionMismatch(
            "prior does not match the class dimension".into(),
        ));
    }
    if class.kind != ClassKind::InvariantSubspace {
        return Err(IdentError::InvalidParameter(
            "prior compatibility needs an invariant-subspace class".into(),
        ));
    }
    ensure_finite(&prior.s)?;
    ensure_finite(&prior.a0)?;
    if prior.s.nrows() == 0 {
        return Ok(PriorVerdict::CompatibleNonUnique { dof: class.dof });
    }
    let st = &prior.s * class.parameter_map();
    let b = &prior.s * vec_col_major(&(&prior.a0 - &class.base));
    let rank_st = numerical_rank(&st, RANK_RTOL);
    let mut aug = DMatrix::zeros(st.nrows(), st.ncols() + 1);
    aug.view_mut((0, 0), st.shape()).copy_from(&st);
    aug.set_column(st.ncols(), &b);
    if numerical_rank(&aug, RANK_RTOL) > rank_st {
        return Ok(PriorVerdict::Incompatible);
    }
    if rank_st < class.dof {
        return Ok(PriorVerdict::CompatibleNonUnique {
            dof: class.dof - rank_st,
        });
    }
    let sol = st
        .clone()
        .svd(true, true)
        .solve(&b, RANK_RTOL * st.norm().max(f64::MIN_POSITIVE))
        .map_err(|e| IdentError::InvalidParameter(e.to_string()))?;
    let k = class.free_size;
    let dmat = DMatrix::from_column_slice(k, k, sol.as_slice());
    Ok(PriorVerdict::Proper {
        member: class.member(&dmat)?,
    })
}

/// `[[A, b], [0′, 0]]`: the inhomogeneous system `ẋ = Ax + b` as a homogeneous one on `(x, 1)`.
pub fn augment_inhomogeneous(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DMatrix<f64>> {
    let d = ensure_system(a)?;
    check_x0(d, b)?;
    let mut out = DMatrix::zeros(d + 1, d + 1);
    out.view_mut((0, 0), (d, d)).copy_from(a);
    out.view_mut((0, d), (d, 1)).copy_from(b);
    Ok(out)
}
