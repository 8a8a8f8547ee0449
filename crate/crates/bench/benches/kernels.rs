use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ident_bench::{observations, system};
use ident_core::expm::expm;
use ident_core::realjordan::{real_jordan, DEFAULT_EIG_TOL};
use ident_core::scores::{pis, scn};
use ident_core::twostage::{estimate_matrix, spline_operators, DEFAULT_ORDER};

fn bench_expm(c: &mut Criterion) {
    let mut g = c.benchmark_group("expm");
    for d in [3, 10, 50] {
        let a = system(d, 1);
        g.bench_with_input(BenchmarkId::from_parameter(d), &a, |b, a| b.iter(|| expm(a).unwrap()));
    }
    g.finish();
}

fn bench_real_jordan(c: &mut Criterion) {
    let mut g = c.benchmark_group("real_jordan");
    for d in [3, 10, 50, 100] {
        let a = system(d, 2);
        g.bench_with_input(BenchmarkId::from_parameter(d), &a, |b, a| {
            b.iter(|| real_jordan(a, DEFAULT_EIG_TOL).unwrap())
        });
    }
    g.finish();
}

fn bench_spline_operators(c: &mut Criterion) {
    let mut g = c.benchmark_group("spline_operators");
    for n in [61, 201, 1001] {
        let (grid, _) = observations(3, n, 3);
        g.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| spline_operators(grid, 1e-3, DEFAULT_ORDER).unwrap())
        });
    }
    g.finish();
}

fn bench_scores(c: &mut Criterion) {
    let mut g = c.benchmark_group("scores");
    for (d, n) in [(3, 61), (4, 201), (10, 201)] {
        let (grid, y) = observations(d, n, 4);
        let ops = spline_operators(&grid, 1e-3, DEFAULT_ORDER).unwrap();
        let id = format!("d{d}_n{n}");
        g.bench_function(BenchmarkId::new("estimate", &id), |b| {
            b.iter(|| estimate_matrix(&y, &ops).unwrap())
        });
        g.bench_function(BenchmarkId::new("scn", &id), |b| b.iter(|| scn(&y, &ops)));
        g.bench_function(BenchmarkId::new("pis", &id), |b| b.iter(|| pis(&y, &ops)));
    }
    g.finish();
}

criterion_group!(benches, bench_expm, bench_real_jordan, bench_spline_operators, bench_scores);
criterion_main!(benches);
