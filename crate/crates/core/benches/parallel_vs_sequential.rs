//! Compares the rayon-parallel Monte Carlo lane against the sequential
//! fallback on the same workload. Both lanes must produce bit-identical
//! reports; only throughput differs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use onebit_put::{
    build_optimal_sr_scheme, mc_mse, mc_mse_sequential, Mode, PrivacyConstraint, SimConfig,
    ThetaSpec,
};
use std::hint::black_box;

fn bench_mc(c: &mut Criterion) {
    let scheme =
        build_optimal_sr_scheme(&PrivacyConstraint::ldp(1.0, 0.1).unwrap(), 4).unwrap();
    let mut group = c.benchmark_group("mc_mse");
    for &trials in &[16usize, 64] {
        let cfg = SimConfig::new(ThetaSpec::Uniform, 5_000, trials, 7, Mode::Sr);
        group.bench_with_input(
            BenchmarkId::new("sequential", trials),
            &cfg,
            |b, cfg| b.iter(|| mc_mse_sequential(black_box(&scheme), black_box(cfg)).unwrap()),
        );
        #[cfg(feature = "parallel")]
        group.bench_with_input(
            BenchmarkId::new("parallel", trials),
            &cfg,
            |b, cfg| b.iter(|| mc_mse(black_box(&scheme), black_box(cfg)).unwrap()),
        );
    }
    group.finish();
}

fn bench_grid_sweep(c: &mut Criterion) {
    // the exact-arithmetic sweep behind the attainment check
    let grid = onebit_put::verify::Grid::small();
    c.bench_function("attainment_sweep_small", |b| {
        b.iter(|| onebit_put::verify::attainment(black_box(&grid)))
    });
}

criterion_group!(benches, bench_mc, bench_grid_sweep);
criterion_main!(benches);
