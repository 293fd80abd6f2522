//! Benchmarks for the likelihood hot path and the grid search, comparing
//! the sequential fallback (workers = 1) against the rayon pool.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use transition_mle::fixtures::{self, GridScale};
use transition_mle::grid::GridSpec;
use transition_mle::likelihood::{gradient, log_likelihood};
use transition_mle::params::ThetaParam;
use transition_mle::search::run_search;

fn bench_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluation");
    for (name, t) in [("study4", 2u32), ("study2", 12), ("study4", 100)] {
        let fixture = fixtures::by_name(name).unwrap();
        let ctx = fixture.context(t).unwrap();
        let s = ctx.dim();
        let theta = ThetaParam::new(s, vec![1.0 / (s as f64 + 1.0); s * (s - 1)]).unwrap();
        group.bench_function(BenchmarkId::new("log_likelihood", format!("{name}_T{t}")), |b| {
            b.iter(|| black_box(log_likelihood(&ctx, black_box(&theta))))
        });
        group.bench_function(BenchmarkId::new("gradient", format!("{name}_T{t}")), |b| {
            b.iter(|| black_box(gradient(&ctx, black_box(&theta)).unwrap()))
        });
    }
    group.finish();
}

fn bench_search(c: &mut Criterion) {
    let fixture = fixtures::by_name("study4").unwrap();
    let ctx = fixture.context(2).unwrap();
    let spec = GridSpec::new(fixture.mask(), vec![6, 6, 6]).unwrap(); // 1000 starts
    let settings = fixture.settings(2);

    let mut group = c.benchmark_group("grid_search_1000_starts");
    group.sample_size(10);
    for workers in [1usize, 2, 4, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter_batched(
                || tempfile::tempdir().unwrap(),
                |dir| {
                    let report = run_search(
                        &ctx,
                        &spec,
                        &settings,
                        w,
                        &dir.path().join("bench.records"),
                    )
                    .unwrap();
                    black_box(report.global_max_loglik)
                },
                criterion::BatchSize::PerIteration,
            )
        });
    }
    group.finish();

    // desk-scale fixture grid, single shot per worker count
    let mut group = c.benchmark_group("grid_search_small_scale");
    group.sample_size(10);
    let spec_small = fixture.grid(GridScale::Small).unwrap();
    for workers in [1usize, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter_batched(
                || tempfile::tempdir().unwrap(),
                |dir| {
                    let report = run_search(
                        &ctx,
                        &spec_small,
                        &settings,
                        w,
                        &dir.path().join("bench.records"),
                    )
                    .unwrap();
                    black_box(report.global_max_loglik)
                },
                criterion::BatchSize::PerIteration,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, bench_evaluation, bench_search);
criterion_main!(benches);
