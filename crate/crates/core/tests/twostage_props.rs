use ident_core::dynamics::{add_noise_with, solve, TimeGrid};
use ident_core::randgen::SeededRng;
use ident_core::twostage::{estimate_matrix, spline_operators};
use ident_core::{DMatrix, DVector};

/// Error against the noise-free estimate grows linearly in the noise level.
#[test]
fn estimation_error_is_linear_in_sigma() {
    let a = DMatrix::from_row_slice(3, 3, &[-0.1, 3.0, 0.0, -3.0, -0.1, 0.0, 0.0, 0.0, -0.5]);
    let x0 = DVector::from_vec(vec![0.6, 0.0, 0.8]);
    let grid = TimeGrid::uniform(0.0, 6.0, 61).unwrap();
    let ops = spline_operators(&grid, 1e-3, 4).unwrap();
    let tr = solve(&a, &x0, &grid).unwrap();
    let base = estimate_matrix(&tr.x, &ops).unwrap().0;
    let sigmas = [0.001, 0.002, 0.004, 0.008];
    let pts: Vec<(f64, f64)> = sigmas
        .iter()
        .map(|&s| {
            let mut rng = SeededRng::new(9, (s * 1e4) as u64);
            let mean = (0..60)
                .map(|_| {
                    let y = add_noise_with(&tr, s, &mut rng).unwrap().y;
                    (estimate_matrix(&y, &ops).unwrap().0 - &base).norm()
                })
                .sum::<f64>()
                / 60.0;
            (s.ln(), mean.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((0.7..=1.3).contains(&slope), "slope {slope}");
}

#[test]
fn dense_noise_free_recovery_of_two_dim_system() {
    let a = DMatrix::from_row_slice(2, 2, &[-0.5, 1.0, -1.0, -0.8]);
    let grid = TimeGrid::uniform(0.0, 2.0, 2001).unwrap();
    let ops = spline_operators(&grid, 1e-6, 4).unwrap();
    let tr = solve(&a, &DVector::from_vec(vec![1.0, 0.5]), &grid).unwrap();
    let ah = estimate_matrix(&tr.x, &ops).unwrap().0;
    assert!((ah - &a).norm() / a.norm() < 0.01);
}
