//! Seeded generators for the random objects used in the experiments.
//!
//! The generator is ChaCha8 (`rand_chacha`), keyed by a 64-bit seed with a separate stream
//! per worker; normals come from `rand_distr`'s ziggurat sampler. Both are fixed so a
//! `(seed, stream)` pair reproduces the same draws everywhere.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{IdentError, Result};
use crate::identcore::block_coefficients;
use crate::realjordan::{real_jordan, DEFAULT_EIG_TOL};

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh generator on another stream of the same seed.
    pub fn with_stream(&self, stream: u64) -> Self {
        SeededRng::new(self.seed, stream)
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.random_range(lo..hi)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(IdentError::InvalidParameter("dimension must be >= 1".into()));
    }
    Ok(())
}

pub fn normal_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> DMatrix<f64> {
    // Fill in row-major order so the draw sequence reads naturally.
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.normal();
        }
    }
    m
}

/// Real Ginibre matrix: i.i.d. standard normal entries.
pub fn ginoe(d: usize, rng: &mut SeededRng) -> Result<DMatrix<f64>> {
    check_dim(d)?;
    Ok(normal_matrix(d, d, rng))
}

/// `(G + G′)/√2` for Ginibre `G`.
pub fn goe(d: usize, rng: &mut SeededRng) -> Result<DMatrix<f64>> {
    let g = ginoe(d, rng)?;
    let mut s = (&g + g.transpose()) * std::f64::consts::FRAC_1_SQRT_2;
    // Force exact symmetry regardless of rounding in the sum.
    for i in 0..d {
        for j in 0..i {
            s[(i, j)] = s[(j, i)];
        }
    }
    Ok(s)
}

/// Haar-distributed orthogonal matrix: QR of a Ginibre draw with `diag(R) > 0`.
pub fn haar_orthogonal(d: usize, rng: &mut SeededRng) -> Result<DMatrix<f64>> {
    let g = ginoe(d, rng)?;
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

pub fn uniform_sphere(d: usize, rng: &mut SeededRng) -> Result<DVector<f64>> {
    check_dim(d)?;
    loop {
        let z = DVector::from_fn(d, |_, _| rng.normal());
        let n = z.norm();
        if n > 0.0 {
            return Ok(z / n);
        }
    }
}

/// One replicate of the four-dimensional two-system experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Sim2Pair {
    /// Distinct eigenvalues `-0.1 ± bi, λ₃, λ₄`.
    pub a: DMatrix<f64>,
    /// Same as `a` with `λ₄` replaced by `λ₃`.
    pub b: DMatrix<f64>,
    pub x0a: DVector<f64>,
    pub x0b: DVector<f64>,
    pub q: DMatrix<f64>,
    pub freq: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub resamples: usize,
}

pub const SIM2_ICIS_FLOOR: f64 = 0.2;
pub const SIM2_RESAMPLE_CAP: usize = 10_000;

pub fn sim2_pair(rng: &mut SeededRng) -> Result<Sim2Pair> {
    let freq = rng.uniform(2.0, 4.0);
    let lambda3 = rng.uniform(-0.8, -0.4);
    let lambda4 = rng.uniform(-2.0, -1.2);
    let q = haar_orthogonal(4, rng)?;
    let core = |l4: f64| {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                -0.1, freq, 0.0, 0.0, -freq, -0.1, 0.0, 0.0, 0.0, 0.0, lambda3, 0.0, 0.0, 0.0,
                0.0, l4,
            ],
        )
    };
    let a = &q * core(lambda4) * q.transpose();
    let b = &q * core(lambda3) * q.transpose();
    let jf = real_jordan(&a, DEFAULT_EIG_TOL)?;
    let mut resamples = 0;
    let x0a = loop {
        if resamples >= SIM2_RESAMPLE_CAP {
            return Err(IdentError::ResampleLimit(SIM2_RESAMPLE_CAP));
        }
        let x = uniform_sphere(4, rng)?;
        if block_coefficients(&jf, &x)?.icis > SIM2_ICIS_FLOOR {
            break x;
        }
        resamples += 1;
    };
    let q4 = q.column(3).into_owned();
    let proj = &x0a - &q4 * q4.dot(&x0a);
    let x0b = &proj / proj.norm();
    Ok(Sim2Pair {
        a,
        b,
        x0a,
        x0b,
        q,
        freq,
        lambda3,
        lambda4,
        resamples,
    })
}
