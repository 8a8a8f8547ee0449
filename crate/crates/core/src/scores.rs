//! Identifiability scores computed from data: Stanhope's κ, the smoothed condition number
//! (SCN), and the practical identifiability score (PIS) built on the MSE sensitivity `W`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::Observations;
use crate::error::{IdentError, Result};
use crate::identcore::block_coefficients;
use crate::linalg::{ensure_finite, frobenius_cond};
use crate::realjordan::{real_jordan, DEFAULT_EIG_TOL};
use crate::twostage::{estimate_matrix, OperatorKind, SmootherOperators};

/// Frobenius condition number of the first `d` columns of `Y`.
pub fn stanhope_kappa(y: &DMatrix<f64>) -> Result<f64> {
    let d = y.nrows();
    if y.ncols() < d {
        return Err(IdentError::TooFewTimePoints {
            needed: d,
            got: y.ncols(),
        });
    }
    ensure_finite(y)?;
    Ok(frobenius_cond(&y.columns(0, d).into_owned()))
}

/// Frobenius condition number of `Y S Y′`.
pub fn scn(y: &DMatrix<f64>, ops: &SmootherOperators) -> Result<f64> {
    ensure_finite(y)?;
    let gram = ops.apply_s(y)? * y.transpose();
    Ok(frobenius_cond(&gram))
}

/// Pieces of the sensitivity expression, kept for inspection and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct WTerms {
    /// `(X S X′)⁻¹`.
    pub n: DMatrix<f64>,
    /// Sum of the nine `d × d` second-moment terms.
    pub sandwich: DMatrix<f64>,
    /// `‖XL‖² − 2⟨AXS, XL⟩ + ‖AXS‖²`.
    pub scalar: f64,
    pub value: f64,
}

/// `W(X | A, S, L)`: leading-order `E‖Â(X + ε) − Â(X)‖²_F / σ²` for i.i.d. noise when
/// `A = Â(X)`.
///
/// With `N = (XSX′)⁻¹` it equals `tr(N² (T + c I))`, where `T` collects
/// `XL·(XL′)′ + d·XL′·(XL′)′ + XL′·(XL)′`, the cross terms
/// `−2[A·XS·(XL′)′ + tr(A)·XS′·(XL′)′ + XS′·(XL)′·A]` and
/// `A′A·XS·(XS′)′ + tr(A′A)·XS′·(XS′)′ + XS′·(XS)′·A′A`, and
/// `c = tr(L′X′XL − 2S′X′A′XL + S′X′A′AXS)`.
pub fn w_terms(x: &DMatrix<f64>, a: &DMatrix<f64>, ops: &SmootherOperators) -> Result<WTerms> {
    let d = x.nrows();
    if a.shape() != (d, d) {
        return Err(IdentError::DimensionMismatch(format!(
            "A is {:?}, data has {d} rows",
            a.shape()
        )));
    }
    ensure_finite(x)?;
    ensure_finite(a)?;
    let xs = ops.apply_s(x)?;
    let xst = ops.apply_st(x)?;
    let xl = ops.apply_l(x)?;
    let xlt = ops.apply_lt(x)?;

    let gram = &xs * x.transpose();
    let cond = frobenius_cond(&gram);
    if !cond.is_finite() {
        return Err(IdentError::SingularGram { cond });
    }
    let n = gram
        .clone()
        .lu()
        .try_inverse()
        .ok_or(IdentError::SingularGram { cond })?;

    let ata = a.transpose() * a;
    let tr_a = a.trace();
    let tr_ata = ata.trace();
    let df = d as f64;

    let mut t = &xl * xlt.transpose();
    t += &xlt * xlt.transpose() * df;
    t += &xlt * xl.transpose();
    t -= a * &xs * xlt.transpose() * 2.0;
    t -= &xst * xlt.transpose() * (2.0 * tr_a);
    t -= &xst * xl.transpose() * a * 2.0;
    t += &ata * &xs * xst.transpose();
    t += &xst * xst.transpose() * tr_ata;
    t += &xst * xs.transpose() * &ata;

    let axs = a * &xs;
    let scalar = xl.norm_squared() - 2.0 * axs.dot(&xl) + axs.norm_squared();

    let n2 = &n * &n;
    let value = (&n2 * &t).trace() + scalar * n2.trace();
    Ok(WTerms {
        n,
        sandwich: t,
        scalar,
        value,
    })
}

pub fn w_function(x: &DMatrix<f64>, a: &DMatrix<f64>, ops: &SmootherOperators) -> Result<f64> {
    Ok(w_terms(x, a, ops)?.value)
}

/// `W(Y | Â, S, L)` with `Â = Y L Y′ (Y S Y′)⁻¹`.
pub fn pis(y: &DMatrix<f64>, ops: &SmootherOperators) -> Result<f64> {
    let (a_hat, _) = estimate_matrix(y, ops)?;
    w_function(y, &a_hat, ops)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub d: usize,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Set when the computed `W` came out negative (reported as is, not clamped).
    pub pis_negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub icis: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w0_magnitudes: Option<Vec<f64>>,
    #[serde(with = "crate::io::extended_f64")]
    pub kappa: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub scn: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub pis: f64,
    pub metadata: ReportMetadata,
}

/// Maps a singular-Gram failure to `+inf` (the worst score); other errors propagate.
pub fn or_infinite(r: Result<f64>) -> Result<f64> {
    match r {
        Ok(v) if v.is_nan() => Ok(f64::INFINITY),
        Ok(v) => Ok(v),
        Err(IdentError::SingularGram { .. }) | Err(IdentError::TooFewTimePoints { .. }) => {
            Ok(f64::INFINITY)
        }
        Err(e) => Err(e),
    }
}

/// All scores for one dataset; ICIS and block magnitudes only when `(A, x₀)` is supplied.
pub fn ident_report(
    obs: &Observations,
    ops: &SmootherOperators,
    system: Option<(&DMatrix<f64>, &DVector<f64>)>,
) -> Result<IdentReport> {
    let (icis, mags) = match system {
        Some((a, x0)) => {
            let jf = real_jordan(a, DEFAULT_EIG_TOL)?;
            let bc = block_coefficients(&jf, x0)?;
            (Some(bc.icis), Some(bc.magnitudes))
        }
        None => (None, None),
    };
    let kappa = or_infinite(stanhope_kappa(&obs.y))?;
    let scn = or_infinite(scn(&obs.y, ops))?;
    let pis = or_infinite(pis(&obs.y, ops))?;
    let lambda = match ops.kind {
        OperatorKind::Spline { lambda, .. } => Some(lambda),
        OperatorKind::Simple => None,
    };
    Ok(IdentReport {
        icis,
        w0_magnitudes: mags,
        kappa,
        scn,
        pis,
        metadata: ReportMetadata {
            d: obs.dim(),
            n: obs.grid.len(),
            sigma: Some(obs.sigma),
            lambda,
            pis_negative: pis < 0.0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{solve, TimeGrid};
    use crate::twostage::{simple_operators, spline_operators};

    /// Exact leading-order MSE through the explicit linear map `vec(ε) ↦ vec(δÂ)`.
    fn w_bruteforce(x: &DMatrix<f64>, a: &DMatrix<f64>, ops: &SmootherOperators) -> f64 {
        let (d, n) = x.shape();
        let s = ops.s();
        let l = ops.l();
        let ninv = (x * &s * x.transpose()).try_inverse().unwrap();
        let mut total = 0.0;
        for i in 0..d {
            for j in 0..n {
                let mut e = DMatrix::zeros(d, n);
                e[(i, j)] = 1.0;
                let el = &e * &l * x.transpose() + x * &l * e.transpose();
                let es = &e * &s * x.transpose() + x * &s * e.transpose();
                let delta = (el - a * es) * &ninv;
                total += delta.norm_squared();
            }
        }
        total
    }

    fn sample_data(n: usize) -> (TimeGrid, DMatrix<f64>, DMatrix<f64>) {
        let a = DMatrix::from_row_slice(2, 2, &[-0.4, 1.3, -1.1, -0.2]);
        let g = TimeGrid::uniform(0.0, 3.0, n).unwrap();
        let tr = solve(&a, &DVector::from_vec(vec![1.0, 0.3]), &g).unwrap();
        (g, tr.x, a)
    }

    #[test]
    fn w_matches_explicit_linearization() {
        let (g, x, a) = sample_data(15);
        for ops in [simple_operators(&g).unwrap(), spline_operators(&g, 1e-2, 4).unwrap()] {
            let w = w_function(&x, &a, &ops).unwrap();
            let b = w_bruteforce(&x, &a, &ops);
            assert!((w - b).abs() < 1e-9 * b.abs(), "{w} vs {b}");
        }
    }

    #[test]
    fn w_scales_inverse_quadratically() {
        let (g, x, a) = sample_data(21);
        let ops = spline_operators(&g, 1e-3, 4).unwrap();
        let t = w_terms(&x, &a, &ops).unwrap();
        for c in [0.5, 3.0] {
            let tc = w_terms(&(&x * c), &a, &ops).unwrap();
            assert!((&tc.n * (c * c) - &t.n).norm() < 1e-10 * t.n.norm());
            assert!((&tc.sandwich - &t.sandwich * (c * c)).norm() < 1e-10 * tc.sandwich.norm());
            assert!((tc.scalar - t.scalar * c * c).abs() < 1e-10 * tc.scalar.abs());
            assert!((tc.value * c * c - t.value).abs() < 1e-10 * t.value.abs());
        }
    }

    #[test]
    fn scalar_monte_carlo_agreement() {
        use crate::randgen::SeededRng;
        let g = TimeGrid::uniform(0.0, 1.0, 41).unwrap();
        let ops = simple_operators(&g).unwrap();
        let x = DMatrix::from_fn(1, 41, |_, j| (-0.8 * g.points()[j]).exp());
        let (a_hat, _) = estimate_matrix(&x, &ops).unwrap();
        let w = w_function(&x, &a_hat, &ops).unwrap();
        let sigma = 1e-3;
        let mut rng = SeededRng::new(11, 0);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let y = x.map(|v| v + sigma * rng.normal());
            let (ah, _) = estimate_matrix(&y, &ops).unwrap();
            acc += (ah - &a_hat).norm_squared();
        }
        let mc = acc / draws as f64 / (sigma * sigma);
        assert!((mc / w - 1.0).abs() < 0.1, "mc {mc} vs w {w}");
    }

    #[test]
    fn pis_is_deterministic() {
        let (g, x, _) = sample_data(31);
        let ops = spline_operators(&g, 1e-3, 4).unwrap();
        assert_eq!(pis(&x, &ops).unwrap(), pis(&x, &ops).unwrap());
    }

    #[test]
    fn kappa_examples() {
        let y = DMatrix::from_fn(3, 5, |i, j| if i == j { 1.0 } else { 0.0 });
        assert!((stanhope_kappa(&y).unwrap() - 3.0).abs() < 1e-12);
        let y = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-12]);
        let k = stanhope_kappa(&y).unwrap();
        assert!((k / 1e12 - 1.0).abs() < 1e-6, "{k}");
        assert!(matches!(
            stanhope_kappa(&DMatrix::zeros(3, 2)),
            Err(IdentError::TooFewTimePoints { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn scn_examples() {
        let (g, x, _) = sample_data(11);
        let ops = simple_operators(&g).unwrap();
        let direct = frobenius_cond(&(&x * x.transpose()));
        assert!((scn(&x, &ops).unwrap() - direct).abs() < 1e-12 * direct);
        assert_eq!(scn(&DMatrix::zeros(2, 11), &ops).unwrap(), f64::INFINITY);
    }

    #[test]
    fn scores_are_permutation_invariant() {
        let a = DMatrix::from_row_slice(3, 3, &[-0.3, 1.0, 0.2, -1.0, -0.3, 0.0, 0.1, 0.0, -0.8]);
        let g = TimeGrid::uniform(0.0, 4.0, 41).unwrap();
        let x = solve(&a, &DVector::from_vec(vec![0.5, -0.2, 0.9]), &g).unwrap().x;
        let ops = spline_operators(&g, 1e-3, 4).unwrap();
        let p = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let px = &p * &x;
        let rel = |u: f64, v: f64| (u - v).abs() / u.abs();
        assert!(rel(scn(&x, &ops).unwrap(), scn(&px, &ops).unwrap()) < 1e-10);
        assert!(rel(pis(&x, &ops).unwrap(), pis(&px, &ops).unwrap()) < 1e-10);
        // κ uses the first d columns, which a row permutation only reorders.
        assert!(rel(stanhope_kappa(&x).unwrap(), stanhope_kappa(&px).unwrap()) < 1e-10);
    }

    #[test]
    fn report_flags_singular_data_as_infinite() {
        let g = TimeGrid::uniform(0.0, 1.0, 11).unwrap();
        let ops = simple_operators(&g).unwrap();
        let obs = Observations::new(g, DMatrix::zeros(2, 11), 0.0).unwrap();
        let rep = ident_report(&obs, &ops, None).unwrap();
        assert_eq!(rep.scn, f64::INFINITY);
        assert_eq!(rep.pis, f64::INFINITY);
        assert_eq!(rep.kappa, f64::INFINITY);
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["pis"], "inf");
        assert!(json.get("icis").is_none());
    }
}
