//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (orders 3, 5, 7, 9, 13; Higham 2005 selection thresholds).

use nalgebra::DMatrix;

use crate::error::{IdentError, Result};
use crate::linalg::norm1;

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Exponential of a square matrix.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(IdentError::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(IdentError::NonFinite);
    }
    let nrm = norm1(a);
    let out = if nrm <= THETA_3 {
        pade_low(a, &B3)?
    } else if nrm <= THETA_5 {
        pade_low(a, &B5)?
    } else if nrm <= THETA_7 {
        pade_low(a, &B7)?
    } else if nrm <= THETA_9 {
        pade_low(a, &B9)?
    } else {
        let s = (nrm / THETA_13).log2().ceil().max(0.0) as i32;
        let scaled = a * 2f64.powi(-s);
        let mut r = pade13(&scaled)?;
        for _ in 0..s {
            r = &r * &r;
        }
        r
    };
    if out.iter().any(|v| !v.is_finite()) {
        return Err(IdentError::Overflow);
    }
    Ok(out)
}

// Generic odd/even split for the low orders.
fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let mut power = ident.clone();
    let mut u_inner = DMatrix::<f64>::zeros(n, n);
    let mut v = DMatrix::<f64>::zeros(n, n);
    let m = b.len() - 1;
    for k in 0..=m / 2 {
        // power = A^(2k)
        v += &power * b[2 * k];
        if 2 * k < m {
            u_inner += &power * b[2 * k + 1];
        }
        if k < m / 2 {
            power = &power * &a2;
        }
    }
    let u = a * u_inner;
    finish(u, v)
}

fn pade13(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let b = &B13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (u_hi + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let v_hi = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = v_hi + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    finish(u, v)
}

fn finish(u: DMatrix<f64>, v: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = &v + &u;
    let q = &v - &u;
    q.lu().solve(&p).ok_or(IdentError::Overflow)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor(a: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
        let n = a.nrows();
        let mut term = DMatrix::<f64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..terms {
            term = &term * a / k as f64;
            sum += &term;
        }
        sum
    }

    #[test]
    fn scalar_exponentials() {
        for &x in &[-30.0, -1.0, -1e-3, 0.0, 0.5, 3.0, 12.0] {
            let e = expm(&DMatrix::from_element(1, 1, x)).unwrap()[(0, 0)];
            assert!((e - f64::exp(x)).abs() <= 1e-13 * f64::exp(x).max(1.0), "x={x}");
        }
    }

    #[test]
    fn zero_matrix_gives_exact_identity() {
        let e = expm(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e, DMatrix::identity(3, 3));
    }

    #[test]
    fn rotation_generator() {
        for &t in &[0.01, 0.7, 2.0, 10.0] {
            let a = DMatrix::from_row_slice(2, 2, &[0.0, t, -t, 0.0]);
            let e = expm(&a).unwrap();
            let want = DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
            assert!((e - want).norm() < 1e-13);
        }
    }

    #[test]
    fn matches_taylor_series_for_every_pade_branch() {
        let base = DMatrix::from_row_slice(3, 3, &[0.1, -0.4, 0.3, 0.2, -0.3, 0.5, -0.6, 0.1, 0.2]);
        let n1 = norm1(&base);
        for &target in &[0.01, 0.2, 0.9, 2.0, 4.0, 9.0] {
            let a = &base * (target / n1);
            let got = expm(&a).unwrap();
            let want = taylor(&a, 80);
            assert!((&got - &want).norm() <= 1e-12 * want.norm(), "norm {target}");
        }
    }

    #[test]
    fn overflow_is_reported() {
        let a = DMatrix::from_element(1, 1, 1000.0);
        assert_eq!(expm(&a), Err(IdentError::Overflow));
    }
}
