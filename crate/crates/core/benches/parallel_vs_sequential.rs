use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rwre_core::env::{sample_alpha_window, EnvDistribution};
use rwre_core::experiments::normalized_max_beta;
use rwre_core::par::Parallelism;
use rwre_core::passage::{batch_rng, estimate_slowdown_mc};

fn modes() -> Vec<(&'static str, Parallelism)> {
    let mut m = vec![("sequential", Parallelism::Sequential)];
    if Parallelism::is_parallel_available() {
        m.push(("threads", Parallelism::Threads(0)));
    }
    m
}

fn slowdown_mc(c: &mut Criterion) {
    let dist = EnvDistribution::canonical_two_point();
    let w = sample_alpha_window(&dist, -250, 250, &mut batch_rng(1, 0)).unwrap();
    let mut g = c.benchmark_group("slowdown_mc");
    g.sample_size(10);
    for (name, par) in modes() {
        g.bench_with_input(BenchmarkId::new(name, 200), &par, |b, &par| {
            b.iter(|| estimate_slowdown_mc(&w, 0, 200, 0.05, 40_000, par, black_box(7)).unwrap())
        });
    }
    g.finish();
}

fn max_beta(c: &mut Criterion) {
    let dist = EnvDistribution::canonical_two_point();
    let mut g = c.benchmark_group("normalized_max_beta");
    g.sample_size(10);
    for (name, par) in modes() {
        g.bench_with_input(BenchmarkId::new(name, 2000), &par, |b, &par| {
            b.iter(|| normalized_max_beta(&dist, 2000, 2.0, 32, 100, black_box(3), par).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, slowdown_mc, max_beta);
criterion_main!(benches);
