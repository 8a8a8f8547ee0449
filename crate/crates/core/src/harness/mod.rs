//! Seeded simulation experiments and the supplementary statistical checks.
//!
//! Every replicate draws from its own stream `SeededRng::new(seed, replicate)`, so results do
//! not depend on the number of worker threads.

mod stats;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

pub use stats::{average_ranks, roc_auc, spearman, Orientation, RocResult};

use crate::dynamics::{add_noise_with, solve, TimeGrid};
use crate::error::{IdentError, Result};
use crate::identcore::block_coefficients;
use crate::randgen::{ginoe, goe, normal_matrix, sim2_pair, uniform_sphere, SeededRng};
use crate::realjordan::{real_jordan, real_jordan_allow_repeated, DEFAULT_EIG_TOL};
use crate::scores::{or_infinite, pis, scn, stanhope_kappa};
use crate::twostage::{estimate_matrix, ree, spline_operators, SmootherOperators, DEFAULT_ORDER};

/// Grid, noise level and smoother shared by both simulation studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_end: f64,
    pub n: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub order: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            t_end: 6.0,
            n: 61,
            sigma: 0.05,
            lambda: 0.001,
            order: DEFAULT_ORDER,
        }
    }
}

impl SimConfig {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(0.0, self.t_end, self.n)
    }

    pub fn operators(&self) -> Result<SmootherOperators> {
        spline_operators(&self.grid()?, self.lambda, self.order)
    }
}

pub fn sim1_system() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[-0.1, 3.0, 0.0, -3.0, -0.1, 0.0, 0.0, 0.0, -0.5])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim1Record {
    pub replicate: usize,
    pub icis: f64,
    /// `NaN` when the estimate failed.
    pub ree_noisy: f64,
    pub ree_clean: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim1Result {
    pub records: Vec<Sim1Record>,
    pub spearman_noisy: f64,
    pub spearman_clean: f64,
    pub failed: usize,
}

fn check_reps(reps: usize, min: usize) -> Result<()> {
    if reps < min {
        return Err(IdentError::InvalidParameter(format!("reps must be >= {min}, got {reps}")));
    }
    Ok(())
}

pub fn run_sim1(reps: usize, seed: u64) -> Result<Sim1Result> {
    run_sim1_with(&SimConfig::default(), reps, seed)
}

pub fn run_sim1_with(cfg: &SimConfig, reps: usize, seed: u64) -> Result<Sim1Result> {
    check_reps(reps, 2)?;
    let a = sim1_system();
    let jf = real_jordan(&a, DEFAULT_EIG_TOL)?;
    let grid = cfg.grid()?;
    let ops = cfg.operators()?;
    let records = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<Sim1Record> {
            let mut rng = SeededRng::new(seed, r as u64);
            let x0 = uniform_sphere(3, &mut rng)?;
            let icis = block_coefficients(&jf, &x0)?.icis;
            let traj = solve(&a, &x0, &grid)?;
            let obs = add_noise_with(&traj, cfg.sigma, &mut rng)?;
            let fit = |y: &DMatrix<f64>| estimate_matrix(y, &ops).and_then(|(ah, _)| ree(&ah, &a));
            let (noisy, clean) = (fit(&obs.y), fit(&traj.x));
            let failed = noisy.is_err() || clean.is_err();
            Ok(Sim1Record {
                replicate: r,
                icis,
                ree_noisy: noisy.unwrap_or(f64::NAN),
                ree_clean: clean.unwrap_or(f64::NAN),
                failed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ok: Vec<&Sim1Record> = records.iter().filter(|r| !r.failed).collect();
    let icis: Vec<f64> = ok.iter().map(|r| r.icis).collect();
    let noisy: Vec<f64> = ok.iter().map(|r| r.ree_noisy).collect();
    let clean: Vec<f64> = ok.iter().map(|r| r.ree_clean).collect();
    Ok(Sim1Result {
        spearman_noisy: spearman(&icis, &noisy)?,
        spearman_clean: spearman(&icis, &clean)?,
        failed: records.len() - ok.len(),
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sim2Case {
    /// System `A` started at `x0a` (identifiable).
    A,
    /// System `A` started at `x0b`, which has no component along `Q·₄`.
    B,
    /// System `B` (repeated real eigenvalue) started at `x0a`.
    C,
}

impl Sim2Case {
    pub const ALL: [Sim2Case; 3] = [Sim2Case::A, Sim2Case::B, Sim2Case::C];

    pub fn label(self) -> &'static str {
        match self {
            Sim2Case::A => "A",
            Sim2Case::B => "B",
            Sim2Case::C => "C",
        }
    }
}

/// Data-driven scores for one dataset; `+inf` marks a singular Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    #[serde(with = "crate::io::extended_f64")]
    pub scn: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub pis: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub kappa: f64,
}

fn score_set(y: &DMatrix<f64>, ops: &SmootherOperators) -> Result<ScoreSet> {
    Ok(ScoreSet {
        scn: or_infinite(scn(y, ops))?,
        pis: or_infinite(pis(y, ops))?,
        kappa: or_infinite(stanhope_kappa(y))?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim2Record {
    pub replicate: usize,
    pub case: Sim2Case,
    /// Depends on the system and `x₀` only, so it is shared by both noise conditions.
    pub icis: f64,
    pub noisy: ScoreSet,
    pub clean: ScoreSet,
    /// Set when some score had to be replaced by `+inf`.
    pub failed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScoreName {
    Icis,
    Scn,
    Pis,
    Kappa,
}

impl ScoreName {
    pub const ALL: [ScoreName; 4] = [ScoreName::Icis, ScoreName::Scn, ScoreName::Pis, ScoreName::Kappa];

    pub fn label(self) -> &'static str {
        match self {
            ScoreName::Icis => "icis",
            ScoreName::Scn => "scn",
            ScoreName::Pis => "pis",
            ScoreName::Kappa => "kappa",
        }
    }

    /// Only the ICIS grows with identifiability.
    pub fn orientation(self) -> Orientation {
        match self {
            ScoreName::Icis => Orientation::HigherIsPositive,
            _ => Orientation::LowerIsPositive,
        }
    }

    fn pick(self, rec: &Sim2Record, noisy: bool) -> f64 {
        let s = if noisy { &rec.noisy } else { &rec.clean };
        match self {
            ScoreName::Icis => rec.icis,
            ScoreName::Scn => s.scn,
            ScoreName::Pis => s.pis,
            ScoreName::Kappa => s.kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim2Result {
    pub records: Vec<Sim2Record>,
    /// Keyed `"<score>/<noisy|clean>"`.
    pub auc_table: BTreeMap<String, RocResult>,
    pub failed: usize,
}

impl Sim2Result {
    pub fn auc(&self, score: ScoreName, noisy: bool) -> Option<f64> {
        self.auc_table.get(&auc_key(score, noisy)).map(|r| r.auc)
    }
}

pub fn auc_key(score: ScoreName, noisy: bool) -> String {
    format!("{}/{}", score.label(), if noisy { "noisy" } else { "clean" })
}

pub fn run_sim2(reps: usize, seed: u64) -> Result<Sim2Result> {
    run_sim2_with(&SimConfig::default(), reps, seed)
}

pub fn run_sim2_with(cfg: &SimConfig, reps: usize, seed: u64) -> Result<Sim2Result> {
    check_reps(reps, 10)?;
    let grid = cfg.grid()?;
    let ops = cfg.operators()?;
    let per_rep = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<Vec<Sim2Record>> {
            let mut rng = SeededRng::new(seed, r as u64);
            let pair = sim2_pair(&mut rng)?;
            let jf_a = real_jordan(&pair.a, DEFAULT_EIG_TOL)?;
            let jf_b = real_jordan_allow_repeated(&pair.b, DEFAULT_EIG_TOL)?;
            let mut out = Vec::with_capacity(3);
            for case in Sim2Case::ALL {
                let (sys, jf, x0) = match case {
                    Sim2Case::A => (&pair.a, &jf_a, &pair.x0a),
                    Sim2Case::B => (&pair.a, &jf_a, &pair.x0b),
                    Sim2Case::C => (&pair.b, &jf_b, &pair.x0a),
                };
                let icis = block_coefficients(jf, x0)?.icis;
                let traj = solve(sys, x0, &grid)?;
                let obs = add_noise_with(&traj, cfg.sigma, &mut rng)?;
                let noisy = score_set(&obs.y, &ops)?;
                let clean = score_set(&traj.x, &ops)?;
                let failed = [noisy, clean]
                    .iter()
                    .any(|s| [s.scn, s.pis, s.kappa].iter().any(|v| v.is_infinite()));
                out.push(Sim2Record {
                    replicate: r,
                    case,
                    icis,
                    noisy,
                    clean,
                    failed,
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<Sim2Record> = per_rep.into_iter().flatten().collect();
    let labels: Vec<bool> = records.iter().map(|r| r.case == Sim2Case::A).collect();
    let mut auc_table = BTreeMap::new();
    for score in ScoreName::ALL {
        for noisy in [true, false] {
            let s: Vec<f64> = records.iter().map(|r| score.pick(r, noisy)).collect();
            auc_table.insert(auc_key(score, noisy), roc_auc(&s, &labels, score.orientation())?);
        }
    }
    Ok(Sim2Result {
        failed: records.iter().filter(|r| r.failed).count(),
        records,
        auc_table,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    Ginoe,
    Goe,
}

impl std::str::FromStr for Ensemble {
    type Err = IdentError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ginoe" => Ok(Ensemble::Ginoe),
            "goe" => Ok(Ensemble::Goe),
            other => Err(IdentError::InvalidParameter(format!("unknown ensemble {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionRow {
    pub d: usize,
    pub icis: Vec<f64>,
    /// Replicates skipped because the decomposition failed.
    pub failed: usize,
}

impl DimensionRow {
    pub fn mean_square(&self) -> f64 {
        self.icis.iter().map(|v| v * v).sum::<f64>() / self.icis.len() as f64
    }

    pub fn median(&self) -> f64 {
        median(&self.icis)
    }
}

pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// ICIS samples for random `A` from the ensemble and `x₀ ~ N(0, I_d)`.
pub fn run_dimension_scaling(
    dims: &[usize],
    reps: usize,
    ensemble: Ensemble,
    seed: u64,
) -> Result<Vec<DimensionRow>> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(IdentError::InvalidParameter("dims must be nonempty and positive".into()));
    }
    check_reps(reps, 1)?;
    dims.iter()
        .enumerate()
        .map(|(k, &d)| {
            let samples: Vec<Option<f64>> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let mut rng = SeededRng::new(seed, ((k as u64) << 32) | r as u64);
                    let a = match ensemble {
                        Ensemble::Ginoe => ginoe(d, &mut rng),
                        Ensemble::Goe => goe(d, &mut rng),
                    }
                    .ok()?;
                    let x0 = DVector::from_fn(d, |_, _| rng.normal());
                    let jf = real_jordan(&a, DEFAULT_EIG_TOL).ok()?;
                    block_coefficients(&jf, &x0).ok().map(|b| b.icis)
                })
                .collect();
            let icis: Vec<f64> = samples.iter().flatten().copied().collect();
            Ok(DimensionRow {
                d,
                failed: reps - icis.len(),
                icis,
            })
        })
        .collect()
}

/// Least-squares slope of `log mean(ICIS²)` against `log d`.
pub fn log_log_slope(rows: &[DimensionRow]) -> Result<f64> {
    if rows.len() < 2 {
        return Err(IdentError::DegenerateInput("need at least two dimensions".into()));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.d as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_square().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 || !sxy.is_finite() {
        return Err(IdentError::DegenerateInput("slope undefined".into()));
    }
    Ok(sxy / sxx)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `E[min of d half-normals] = ∫₀^∞ [2(1 − Φ(x))]^d dx`.
pub fn expected_min_halfnormal(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(IdentError::InvalidParameter("d must be >= 1".into()));
    }
    let upper = 8.0 / (d as f64).sqrt() + 8.0;
    let f = move |x: f64| erfc(x / std::f64::consts::SQRT_2).powi(d as i32);
    Ok(integrate(&f, 0.0, upper, 1e-9))
}

/// CDF of the Weibull law with scale 1 and shape 1/2.
pub fn weibull_half_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (-x.sqrt()).exp()
    }
}

/// One-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

pub const WEIBULL_KS_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeibullTest {
    pub ks_distance: f64,
    pub pass: bool,
}

/// KS distance of `(2d³/π)·min_i x_i²` for `x` uniform on the sphere against Weibull(1, 1/2).
pub fn weibull_limit_test(d: usize, draws: usize, seed: u64) -> Result<WeibullTest> {
    if d == 0 || draws == 0 {
        return Err(IdentError::InvalidParameter("d and draws must be positive".into()));
    }
    let scale = 2.0 * (d as f64).powi(3) / std::f64::consts::PI;
    let samples = (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = SeededRng::new(seed, k as u64);
            let x = uniform_sphere(d, &mut rng)?;
            Ok(scale * x.iter().map(|v| v * v).fold(f64::INFINITY, f64::min))
        })
        .collect::<Result<Vec<f64>>>()?;
    let ks = ks_distance(&samples, weibull_half_cdf);
    Ok(WeibullTest {
        ks_distance: ks,
        pass: ks < WEIBULL_KS_THRESHOLD,
    })
}

/// Monte Carlo means of `εAε` and `εBε′` for `ε` with i.i.d. `N(0, 1)` entries of shape `d × n`.
pub fn matrix_expectations(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    draws: usize,
    rng: &mut SeededRng,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, d) = a.shape();
    if b.shape() != (n, n) {
        return Err(IdentError::DimensionMismatch(format!(
            "A is {:?} so B must be {n}x{n}, got {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if draws == 0 {
        return Err(IdentError::InvalidParameter("draws must be positive".into()));
    }
    let mut sa = DMatrix::zeros(d, n);
    let mut sb = DMatrix::zeros(d, d);
    for _ in 0..draws {
        let e = normal_matrix(d, n, rng);
        sa += &e * a * &e;
        sb += &e * b * e.transpose();
    }
    let k = draws as f64;
    Ok((sa / k, sb / k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixExpectationTest {
    /// `‖mean(εAε) − A′‖_F / ‖A′‖_F`.
    pub rel_err_a: f64,
    /// `‖mean(εBε′) − tr(B) I‖_F / ‖tr(B) I‖_F`.
    pub rel_err_b: f64,
    pub max_rel_err: f64,
}

/// Checks `E(εAε) = A′` and `E(εBε′) = tr(B)·I` for a random `A` (`n × d`) and a random
/// positive semidefinite `B = GG′/n`.
pub fn matrix_expectation_test(
    d: usize,
    n: usize,
    draws: usize,
    seed: u64,
) -> Result<MatrixExpectationTest> {
    if d == 0 || n == 0 {
        return Err(IdentError::InvalidParameter("d and n must be positive".into()));
    }
    let mut rng = SeededRng::new(seed, 0);
    let a = normal_matrix(n, d, &mut rng);
    let g = normal_matrix(n, n, &mut rng);
    let b = &g * g.transpose() / n as f64;
    let (ma, mb) = matrix_expectations(&a, &b, draws, &mut rng)?;
    let want_a = a.transpose();
    let want_b = DMatrix::identity(d, d) * b.trace();
    let rel_err_a = (&ma - &want_a).norm() / want_a.norm();
    let rel_err_b = (&mb - &want_b).norm() / want_b.norm();
    Ok(MatrixExpectationTest {
        rel_err_a,
        rel_err_b,
        max_rel_err: rel_err_a.max(rel_err_b),
    })
}
