use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::env::DEFAULT_TEST_CONTEXTS;
use crate::error::{invalid, Result};
use crate::hpo::air::{DEFAULT_ALPHA_INIT, DEFAULT_DELTA, DEFAULT_GAMMA};
use crate::hpo::{Algo, Estimator, SamplerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    HpoRun,
    BoundsStudy,
    OptimalityTable,
    PropChecks,
    Obd,
}

/// Everything an experiment needs; field names double as config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub beta0: Vec<f64>,
    pub algo: Vec<Algo>,
    pub sampler: SamplerKind,
    pub estimator: Estimator,
    pub trials: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub seeds: usize,
    pub delta: f64,
    pub gamma: f64,
    pub alpha_init: f64,
    /// Share one environment across seeds instead of drawing one per seed.
    pub fix_env: bool,
    /// Root seed; every run seed is derived from it.
    pub seed: u64,
    /// Contexts in the ground-truth test pool.
    pub n_test: usize,
    /// Validation sizes for the bounds study.
    pub n: Vec<usize>,
    /// Replications for the bounds study and the coverage check.
    pub reps: usize,
    /// Grid size |Θ| for the finite-grid checks.
    pub grid_size: usize,
    /// Worker threads; 0 picks the number of available cores.
    pub workers: usize,
    pub out: PathBuf,
    /// Logs of the adaptive logging policy, for the real-data protocol.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_logs: Option<PathBuf>,
    /// Uniform-random logs used as the test set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_logs: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rows: Option<usize>,
    /// Slot kept from multi-position logs; an empty string keeps every row.
    pub position: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::HpoRun,
            beta0: vec![0.0, 3.0, 20.0],
            algo: vec![Algo::Baseline],
            sampler: SamplerKind::Tpe,
            estimator: Estimator::Ips,
            trials: 1000,
            n_train: 1000,
            n_val: 1000,
            seeds: 25,
            delta: DEFAULT_DELTA,
            gamma: DEFAULT_GAMMA,
            alpha_init: DEFAULT_ALPHA_INIT,
            fix_env: false,
            seed: 0,
            n_test: DEFAULT_TEST_CONTEXTS,
            n: vec![400, 800, 1600, 3200, 6400, 12800],
            reps: 200,
            grid_size: 20,
            workers: 0,
            out: PathBuf::from("results"),
            train_logs: None,
            test_logs: None,
            max_rows: None,
            position: "1".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta0.is_empty() || self.beta0.iter().any(|b| !b.is_finite()) {
            return invalid("beta0 must be a non-empty list of finite values");
        }
        if self.algo.is_empty() {
            return invalid("algo must name at least one procedure");
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.n_train < 2 || self.n_val < 2 {
            return invalid("n_train and n_val must be at least 2");
        }
        if self.seeds == 0 {
            return invalid("seeds must be at least 1");
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return invalid(format!("delta must lie in (0, 0.5], got {}", self.delta));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return invalid(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.alpha_init) {
            return invalid(format!("alpha_init must lie in [0, 1], got {}", self.alpha_init));
        }
        if self.n_test == 0 {
            return invalid("n_test must be at least 1");
        }
        if self.n.is_empty() || self.n.iter().any(|&n| n < 2) {
            return invalid("every validation size in n must be at least 2");
        }
        if self.reps == 0 || self.grid_size == 0 {
            return invalid("reps and grid_size must be at least 1");
        }
        Ok(())
    }

    /// A Rayon pool sized by `workers`.
    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| crate::error::Error::InvalidInput(format!("cannot start worker pool: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range_values() {
        let bad = [
            ExperimentConfig { trials: 0, ..Default::default() },
            ExperimentConfig { delta: 0.6, ..Default::default() },
            ExperimentConfig { n_val: 1, ..Default::default() },
            ExperimentConfig { beta0: vec![], ..Default::default() },
            ExperimentConfig { alpha_init: 1.5, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
