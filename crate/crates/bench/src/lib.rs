//! Shared fixtures for the benchmarks.

use ciropt_core::harness::{RunSeeds, SyntheticWorld};
use ciropt_core::hpo::{build_policy, sample_random, Observation, SearchSpace};
use ciropt_core::rng::rng_from_seed;
use ciropt_core::{HyperparamPoint, SoftmaxPolicy};

/// A world at β₀ = 3 with the default sizes used by the HPO experiments.
pub fn world(n_test: usize) -> SyntheticWorld {
    SyntheticWorld::build(&RunSeeds::new(7, 0, false), 3.0, 1000, 1000, n_test).expect("valid world")
}

/// A point of the requested family drawn from the default space.
pub fn point(forest: bool, seed: u64) -> HyperparamPoint {
    let space = SearchSpace::default();
    let mut rng = rng_from_seed(seed);
    loop {
        let p = sample_random(&space, &mut rng);
        if p.forest().is_some() == forest {
            return p;
        }
    }
}

pub fn policy(world: &SyntheticWorld, forest: bool) -> SoftmaxPolicy {
    build_policy(&point(forest, 1), &world.train, 3).expect("fit")
}

/// A synthetic sampler history of `n` random points with a smooth objective.
pub fn history(n: usize) -> Vec<Observation> {
    let space = SearchSpace::default();
    let mut rng = rng_from_seed(11);
    (0..n)
        .map(|_| {
            let point = sample_random(&space, &mut rng);
            let objective = -(point.beta.ln() - 1.0).powi(2);
            Observation { point, objective }
        })
        .collect()
}
