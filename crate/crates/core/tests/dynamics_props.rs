use ident_core::dynamics::{gram_matrix, solve, TimeGrid};
use ident_core::expm::expm;
use ident_core::randgen::{normal_matrix, SeededRng};
use ident_core::{DMatrix, DVector};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semigroup(seed in any::<u64>(), d in 1usize..=6, t in 0.0..1.5f64, s in 0.0..1.5f64) {
        let mut rng = SeededRng::new(seed, 0);
        let a = normal_matrix(d, d, &mut rng) * 0.5;
        let x0 = DVector::from_fn(d, |_, _| rng.normal());
        let grid = TimeGrid::new(vec![0.0, t + 1e-9, t + s + 2e-9]).unwrap();
        let x = solve(&a, &x0, &grid).unwrap().x;
        let step = expm(&(&a * (s + 1e-9))).unwrap() * x.column(1);
        let col = x.column(2);
        prop_assert!((step - col).norm() <= 1e-9 * col.norm().max(1e-300));
    }

    #[test]
    fn gram_is_bilinear(seed in any::<u64>(), c in -5.0..5.0f64) {
        let mut rng = SeededRng::new(seed, 1);
        let grid = TimeGrid::uniform(0.0, 2.0, 17).unwrap();
        let x = normal_matrix(3, 17, &mut rng);
        let z = normal_matrix(3, 17, &mut rng);
        let y = normal_matrix(2, 17, &mut rng);
        let g = |p: &DMatrix<f64>, q: &DMatrix<f64>| gram_matrix(p, q, &grid).unwrap();
        prop_assert!((g(&(&x * c), &y) - g(&x, &y) * c).norm() <= 1e-12 * (1.0 + c.abs()) * 10.0);
        prop_assert!((g(&(&x + &z), &y) - g(&x, &y) - g(&z, &y)).norm() <= 1e-12 * 10.0);
        let gx = g(&x, &x);
        prop_assert_eq!(gx.clone(), gx.transpose());
    }
}
