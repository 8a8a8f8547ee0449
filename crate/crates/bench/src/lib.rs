//! Fixed inputs shared by the benchmarks.

use ident_core::dynamics::{add_noise, solve};
use ident_core::randgen::{ginoe, uniform_sphere};
use ident_core::{DMatrix, SeededRng, TimeGrid};

/// Ginibre matrix scaled to unit spectral radius on average.
pub fn system(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = SeededRng::new(seed, 0);
    ginoe(d, &mut rng).expect("d > 0") / (d as f64).sqrt()
}

/// Noisy observations of `system(d, seed)` on `n` points of `[0, 6]`.
pub fn observations(d: usize, n: usize, seed: u64) -> (TimeGrid, DMatrix<f64>) {
    let mut rng = SeededRng::new(seed, 1);
    let grid = TimeGrid::uniform(0.0, 6.0, n).expect("n >= 2");
    let x0 = uniform_sphere(d, &mut rng).expect("d > 0");
    let traj = solve(&system(d, seed), &x0, &grid).expect("finite solution");
    let obs = add_noise(&traj, 0.05, seed).expect("finite noise");
    (grid, obs.y)
}
