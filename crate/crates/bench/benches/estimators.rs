use ciropt_bench::{policy, world};
use ciropt_core::ope::{dr, ips, lower_bound_ttest, paired_t_from_logged};
use ciropt_core::{Policy, RewardModel};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn estimators(c: &mut Criterion) {
    let w = world(1000);
    let pi = policy(&w, false);
    let model = RewardModel::constant(w.val.d_x(), w.val.n_actions(), 0.3);
    let logged: Vec<f64> = w.val.iter().map(|s| pi.action_prob(s.context, s.action)).collect();
    let base: Vec<f64> = w.val.iter().map(|s| w.logging.action_prob(s.context, s.action)).collect();

    c.bench_function("ips n=1000", |b| b.iter(|| ips(black_box(&pi), &w.val).unwrap()));
    c.bench_function("dr n=1000", |b| b.iter(|| dr(black_box(&pi), &w.val, &model).unwrap()));
    let terms = ips(&pi, &w.val).unwrap();
    c.bench_function("ttest lower bound", |b| b.iter(|| lower_bound_ttest(black_box(&terms), 0.05).unwrap()));
    c.bench_function("paired t", |b| b.iter(|| paired_t_from_logged(black_box(&logged), &base, &w.val).unwrap()));
}

criterion_group!(benches, estimators);
criterion_main!(benches);
