use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hetcop::dvine::loglik;
use hetcop::margins::{fit_margin, KdeConfig, Margin};
use hetcop_bench::{arch_series, vine};
use std::hint::black_box;

fn likelihood(c: &mut Criterion) {
    let (y, margin) = arch_series(5_000);
    let u = margin.pit(&y);
    let mut g = c.benchmark_group("loglik_5000");
    for p in [1, 3] {
        let spec = vine(p);
        g.bench_with_input(BenchmarkId::from_parameter(p), &spec, |b, s| {
            b.iter(|| loglik(s, black_box(&u)))
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let spec = vine(3);
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.bench_function("p3_2000", |b| b.iter(|| spec.simulate(black_box(2_000), 7)));
    g.finish();
}

fn margins(c: &mut Criterion) {
    let (y, _) = arch_series(5_000);
    let mut g = c.benchmark_group("kde");
    g.sample_size(10);
    g.bench_function("fit_5000", |b| b.iter(|| fit_margin(black_box(&y), &KdeConfig::default())));
    g.finish();
}

criterion_group!(benches, likelihood, simulation, margins);
criterion_main!(benches);
