//! Experiment drivers that reproduce the HPO, bounds, optimality and
//! finite-grid studies and persist their results as CSV.
//!
//! Seed topology: run `k` of an experiment uses `derive_seed(root, k)`; the
//! environment, training data, validation data, sampler and test pool each
//! draw from their own stream of that seed. With `fix_env` the environment
//! and test pool come from the root seed instead, so only data and sampler
//! vary across runs.

pub mod bounds;
pub mod config;
pub mod hpo_run;
pub mod output;
pub mod props;
pub mod table;

use std::sync::Arc;

pub use bounds::{bounds_error_rates, run_bounds_study, BoundsRow, ErrorRate, EVAL_BETA, EVAL_LR};
pub use config::{ExperimentConfig, ExperimentKind};
pub use hpo_run::{run_hpo_experiment, HpoCell, HpoRunResult, SummaryRow, TrialRow};
pub use output::{fmt_float, write_csv, CsvRow};
pub use props::{run_prop_checks, PropCheck, PropRow};
pub use table::{run_optimality_table, OptimalityRow, TABLE_BETA0};

use crate::data::LoggedDataset;
use crate::env::{
    sample_environment, sample_logged_data, softmax_logging_policy, LoggingPolicy, SyntheticEnvironment, TestPool,
};
use crate::error::Result;
use crate::rng::{derive_seed, stream_seed, Stream};

pub const CONTEXT_DIM: usize = 10;
pub const EMBEDDING_DIM: usize = 10;
pub const ACTIONS: usize = 10;

/// Seeds of run `index` under the documented topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub run: u64,
    pub environment: u64,
}

impl RunSeeds {
    pub fn new(root: u64, index: usize, fix_env: bool) -> Self {
        let run = derive_seed(root, index as u64);
        let env_base = if fix_env { root } else { run };
        Self { run, environment: stream_seed(env_base, Stream::Environment) }
    }

    pub fn pool(&self) -> u64 {
        stream_seed(self.environment, Stream::TestPool)
    }

    pub fn train(&self) -> u64 {
        stream_seed(self.run, Stream::TrainData)
    }

    pub fn val(&self) -> u64 {
        stream_seed(self.run, Stream::ValData)
    }
}

/// Default-sized synthetic environment for `seeds`.
pub fn environment(seeds: &RunSeeds) -> Result<Arc<SyntheticEnvironment>> {
    Ok(Arc::new(sample_environment(seeds.environment, CONTEXT_DIM, EMBEDDING_DIM, ACTIONS)?))
}

/// An environment with its logging policy, logged data and test pool.
pub struct SyntheticWorld {
    pub env: Arc<SyntheticEnvironment>,
    pub logging: LoggingPolicy,
    pub train: LoggedDataset,
    pub val: LoggedDataset,
    pub pool: TestPool,
}

impl SyntheticWorld {
    pub fn build(seeds: &RunSeeds, beta0: f64, n_train: usize, n_val: usize, n_test: usize) -> Result<Self> {
        let env = environment(seeds)?;
        let logging = softmax_logging_policy(env.clone(), beta0);
        let train = sample_logged_data(&env, &logging, n_train, seeds.train())?;
        let val = sample_logged_data(&env, &logging, n_val, seeds.val())?;
        let pool = TestPool::new(&env, n_test, seeds.pool())?;
        Ok(Self { env, logging, train, val, pool })
    }
}

/// Mean and 1.96·SE over runs (SE from the n−1 sample deviation; 0 for one run).
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_topology() {
        let a = RunSeeds::new(7, 0, false);
        let b = RunSeeds::new(7, 1, false);
        assert_ne!(a.environment, b.environment);
        assert_ne!(a.train(), a.val());
        let c = RunSeeds::new(7, 0, true);
        let d = RunSeeds::new(7, 1, true);
        assert_eq!(c.environment, d.environment);
        assert_ne!(c.train(), d.train());
    }

    #[test]
    fn mean_ci_values() {
        assert_eq!(mean_ci(&[2.0]), (2.0, 0.0));
        let (m, ci) = mean_ci(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((ci - 1.96).abs() < 1e-12);
    }
}
