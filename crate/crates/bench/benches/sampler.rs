use ciropt_bench::history;
use ciropt_core::hpo::{Sampler, SearchSpace};
use ciropt_core::rng::rng_from_seed;
use ciropt_core::SamplerKind;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn sampler(c: &mut Criterion) {
    let space = SearchSpace::default();
    for kind in [SamplerKind::Random, SamplerKind::Tpe] {
        let s = Sampler::from_kind(kind);
        for n in [50, 300] {
            let h = history(n);
            let mut rng = rng_from_seed(5);
            c.bench_function(&format!("suggest {} history={n}", kind.as_str()), |b| {
                b.iter(|| s.suggest(black_box(&h), &space, &mut rng))
            });
        }
    }
}

criterion_group!(benches, sampler);
criterion_main!(benches);
