use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use timdp_bench::{separable, timing_config};
use timdp_core::clustering::{brute_force_optimal, gsa_r, ClusterValueBackend, ScoreOptions};

fn clustering(c: &mut Criterion) {
    let model = separable(8);
    let options = ScoreOptions::new(ClusterValueBackend::Decomposed, timing_config());
    let mut group = c.benchmark_group("cluster");
    group.sample_size(10);
    for k in [2, 4] {
        group.bench_with_input(BenchmarkId::new("gsa_r", k), &k, |b, &k| {
            b.iter(|| gsa_r(&model, k, &options).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("brute", k), &k, |b, &k| {
            b.iter(|| brute_force_optimal(&model, k, &options).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, clustering);
criterion_main!(benches);
