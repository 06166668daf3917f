//! Parallel vs sequential experiment harness on the published table sizes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use online_mms::experiments::{
    run_experiment, run_experiment_sequential, GeneratorConfig, ItemOrder,
};
use online_mms::Kind;

fn bench_harness(c: &mut Criterion) {
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    for &(n, m, trials) in &[(10usize, 100usize, 50usize), (50, 500, 10)] {
        let config = GeneratorConfig {
            n,
            m,
            kind: Kind::Goods,
            order: ItemOrder::Descending,
        };
        let label = format!("n{n}-m{m}-t{trials}");
        group.bench_with_input(BenchmarkId::new("parallel", &label), &config, |b, cfg| {
            b.iter(|| run_experiment("alg2-monotone-goods", None, cfg, trials, 1).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", &label), &config, |b, cfg| {
            b.iter(|| {
                run_experiment_sequential("alg2-monotone-goods", None, cfg, trials, 1).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_harness);
criterion_main!(benches);
