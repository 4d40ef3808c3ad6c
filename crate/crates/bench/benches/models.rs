use ciropt_bench::{point, world};
use ciropt_core::hpo::{build_policy, fit_reward_model};
use ciropt_core::PolicyTable;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn models(c: &mut Criterion) {
    let w = world(10_000);
    let mut g = c.benchmark_group("models");
    g.sample_size(20);
    for (name, forest) in [("lr", false), ("rf", true)] {
        let theta = point(forest, 1);
        g.bench_function(format!("fit {name}"), |b| {
            b.iter(|| fit_reward_model(black_box(&theta), &w.train, 3).unwrap())
        });
        let pi = build_policy(&theta, &w.train, 3).unwrap();
        g.bench_function(format!("tabulate {name} n=1000"), |b| {
            b.iter(|| PolicyTable::tabulate(black_box(&pi), &w.val))
        });
        g.bench_function(format!("true value {name} n=10000"), |b| b.iter(|| w.pool.value(black_box(&pi))));
    }
    g.finish();
}

criterion_group!(benches, models);
criterion_main!(benches);
