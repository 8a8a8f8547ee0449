use ident_core::harness::{
    expected_min_halfnormal, median, roc_auc, run_dimension_scaling, run_sim1, run_sim2, spearman,
    Ensemble, Orientation, Sim2Case,
};
use ident_core::randgen::{sim2_pair, SeededRng};
use ident_core::realjordan::{real_jordan, DEFAULT_EIG_TOL};
use ident_core::DMatrix;
use proptest::prelude::*;

proptest! {
    #[test]
    fn roc_is_monotone_and_bounded(
        scores in prop::collection::vec(-5i32..5, 2..40),
        flips in prop::collection::vec(any::<bool>(), 40),
    ) {
        let s: Vec<f64> = scores.iter().map(|&v| v as f64).collect();
        let mut labels: Vec<bool> = flips[..s.len()].to_vec();
        labels[0] = true;
        labels[1] = false;
        let r = roc_auc(&s, &labels, Orientation::HigherIsPositive).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.auc));
        prop_assert!(r.curve.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
        prop_assert_eq!(*r.curve.last().unwrap(), (1.0, 1.0));
        let flipped = roc_auc(&s, &labels, Orientation::LowerIsPositive).unwrap();
        prop_assert!((r.auc + flipped.auc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_is_bounded_and_symmetric(
        x in prop::collection::vec(-100.0..100.0f64, 3..30),
        y in prop::collection::vec(-100.0..100.0f64, 30),
    ) {
        let y = &y[..x.len()];
        if let (Ok(r), Ok(r2)) = (spearman(&x, y), spearman(y, &x)) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            prop_assert!((r - r2).abs() < 1e-12);
        }
    }

    #[test]
    fn sim2_construction(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed, 0);
        let p = sim2_pair(&mut rng).unwrap();
        let jf = real_jordan(&p.a, DEFAULT_EIG_TOL).unwrap();
        prop_assert!((jf.reconstruct() - &p.a).norm() < 1e-10);
        prop_assert!((&p.q * p.q.transpose() - DMatrix::identity(4, 4)).norm() < 1e-10);
        prop_assert!(p.q.column(3).dot(&p.x0b).abs() < 1e-12);
        prop_assert!((p.x0b.norm() - 1.0).abs() < 1e-12);
        prop_assert!((2.0..=4.0).contains(&p.freq));
        prop_assert!((-0.8..=-0.4).contains(&p.lambda3));
        prop_assert!((-2.0..=-1.2).contains(&p.lambda4));
    }
}

#[test]
fn sim1_runs_are_reproducible_and_clean_beats_noisy() {
    let a = run_sim1(40, 123).unwrap();
    assert_eq!(a, run_sim1(40, 123).unwrap());
    let clean: Vec<f64> = a.records.iter().map(|r| r.ree_clean).collect();
    let noisy: Vec<f64> = a.records.iter().map(|r| r.ree_noisy).collect();
    assert!(median(&clean) <= median(&noisy));
}

#[test]
fn sim2_reproducible_with_identifiable_case_a() {
    let r = run_sim2(12, 5).unwrap();
    assert_eq!(r, run_sim2(12, 5).unwrap());
    assert!(r
        .records
        .iter()
        .filter(|x| x.case == Sim2Case::A)
        .all(|x| x.icis > 0.2));
}

#[test]
fn sim2_noise_free_orderings() {
    let r = run_sim2(60, 8).unwrap();
    let med = |case: Sim2Case, f: fn(&ident_core::harness::Sim2Record) -> f64| {
        let v: Vec<f64> = r.records.iter().filter(|x| x.case == case).map(f).collect();
        median(&v)
    };
    for f in [
        (|x: &ident_core::harness::Sim2Record| x.clean.kappa) as fn(&_) -> f64,
        |x| x.clean.scn,
        |x| x.clean.pis,
    ] {
        assert!(med(Sim2Case::B, f) > med(Sim2Case::A, f));
        assert!(med(Sim2Case::C, f) > med(Sim2Case::A, f));
    }
}

#[test]
fn ginoe_median_icis_falls_with_dimension() {
    // Population medians at d=3 and d=5 differ by about 0.03, so 50 draws cannot order them.
    let small = run_dimension_scaling(&[3, 5], 4000, Ensemble::Ginoe, 17).unwrap();
    let large = run_dimension_scaling(&[100], 200, Ensemble::Ginoe, 17).unwrap();
    let meds: Vec<f64> = small.iter().chain(&large).map(|r| r.median()).collect();
    assert!(meds[0] > meds[1] && meds[1] > meds[2], "{meds:?}");
}

#[test]
fn goe_mean_square_ratios_stay_bounded() {
    let rows = run_dimension_scaling(&[8, 16, 32, 64], 200, Ensemble::Goe, 3).unwrap();
    for w in rows.windows(2) {
        let scaled = |r: &ident_core::harness::DimensionRow| r.mean_square() * (r.d * r.d) as f64;
        let ratio = scaled(&w[1]) / scaled(&w[0]);
        assert!((0.25..=4.0).contains(&ratio), "{ratio}");
    }
}

/// Ten million pairs of half-normals against the quadrature value.
#[test]
fn halfnormal_min_d2_monte_carlo() {
    let e2 = expected_min_halfnormal(2).unwrap();
    let mut rng = SeededRng::new(1, 0);
    let k = 10_000_000usize;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..k {
        let m = rng.normal().abs().min(rng.normal().abs());
        s += m;
        s2 += m * m;
    }
    let mean = s / k as f64;
    let se = ((s2 / k as f64 - mean * mean) / k as f64).sqrt();
    assert!((mean - e2).abs() < 3.0 * se, "{mean} vs {e2} (se {se})");
}
