use rayon::prelude::*;

use super::output::{fmt_float, CsvRow};
use super::{environment, mean_ci, ExperimentConfig, RunSeeds};
use crate::env::{softmax_logging_policy, TestPool};
use crate::error::Result;

/// β₀ values of the logging-policy optimality table.
pub const TABLE_BETA0: [f64; 5] = [-3.0, 0.0, 3.0, 10.0, 20.0];

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityRow {
    pub beta0: f64,
    /// Mean V(π₀) over environments.
    pub v_logging: f64,
    /// Mean V(π*) over environments.
    pub v_optimal: f64,
    /// Mean of the per-environment ratio V(π₀)/V(π*).
    pub ratio: f64,
    pub n_env: usize,
}

impl CsvRow for OptimalityRow {
    const HEADER: &'static [&'static str] = &["beta0", "v_logging", "v_optimal", "ratio", "n_env"];

    fn record(&self) -> Vec<String> {
        vec![
            fmt_float(self.beta0),
            fmt_float(self.v_logging),
            fmt_float(self.v_optimal),
            fmt_float(self.ratio),
            self.n_env.to_string(),
        ]
    }
}

/// Value and optimality of the logging policy per β₀, averaged over
/// `cfg.seeds` environments (`cfg.beta0`, `cfg.n_test`, `cfg.seed`).
pub fn run_optimality_table(cfg: &ExperimentConfig) -> Result<Vec<OptimalityRow>> {
    cfg.validate()?;
    let per_env = |k: usize| -> Result<Vec<(f64, f64)>> {
        let seeds = RunSeeds::new(cfg.seed, k, false);
        let env = environment(&seeds)?;
        let pool = TestPool::new(&env, cfg.n_test, seeds.pool())?;
        let v_star = pool.optimal_value();
        Ok(cfg.beta0.iter().map(|&b| (pool.value(&softmax_logging_policy(env.clone(), b)), v_star)).collect())
    };
    let envs: Vec<Vec<(f64, f64)>> =
        cfg.thread_pool()?.install(|| (0..cfg.seeds).into_par_iter().map(per_env).collect::<Result<_>>())?;
    Ok(cfg
        .beta0
        .iter()
        .enumerate()
        .map(|(j, &beta0)| {
            let v0: Vec<f64> = envs.iter().map(|e| e[j].0).collect();
            let vs: Vec<f64> = envs.iter().map(|e| e[j].1).collect();
            let ratio: Vec<f64> = envs.iter().map(|e| e[j].0 / e[j].1).collect();
            OptimalityRow {
                beta0,
                v_logging: mean_ci(&v0).0,
                v_optimal: mean_ci(&vs).0,
                ratio: mean_ci(&ratio).0,
                n_env: envs.len(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_increases_with_beta0() {
        let cfg =
            ExperimentConfig { beta0: TABLE_BETA0.to_vec(), seeds: 3, n_test: 2000, workers: 1, ..Default::default() };
        let rows = run_optimality_table(&cfg).unwrap();
        assert_eq!(rows.len(), 5);
        for w in rows.windows(2) {
            assert!(w[1].ratio > w[0].ratio);
        }
        assert!(rows.iter().all(|r| r.ratio <= 1.0 && r.v_logging <= r.v_optimal));
    }
}
