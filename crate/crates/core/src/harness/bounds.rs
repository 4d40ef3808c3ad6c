use std::sync::Arc;

use rayon::prelude::*;

use super::output::{fmt_float, CsvRow};
use super::{environment, ExperimentConfig, RunSeeds};
use crate::env::{sample_logged_data, softmax_logging_policy, TestPool};
use crate::error::Result;
use crate::model::{fit_logistic, LrHyperparams, RewardModel};
use crate::ope::{empirical_w_max, ips, lower_bound, BoundMethod};
use crate::policy::SoftmaxPolicy;
use crate::rng::derive_seed;

/// Inverse temperature of the fixed evaluation policy.
pub const EVAL_BETA: f64 = 10.0;
/// Logistic regression settings of the evaluation policy's reward model.
pub const EVAL_LR: LrHyperparams = LrHyperparams { c: 1.0, l1_ratio: 0.5 };

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub seed: usize,
    pub beta0: f64,
    pub n: usize,
    pub method: BoundMethod,
    pub delta: f64,
    pub estimate: f64,
    pub lower_bound: f64,
    pub v_true: f64,
    pub violated: bool,
}

impl CsvRow for BoundsRow {
    const HEADER: &'static [&'static str] =
        &["seed", "beta0", "n", "method", "delta", "estimate", "lower_bound", "v_true", "violated"];

    fn record(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            fmt_float(self.beta0),
            self.n.to_string(),
            self.method.as_str().into(),
            fmt_float(self.delta),
            fmt_float(self.estimate),
            fmt_float(self.lower_bound),
            fmt_float(self.v_true),
            self.violated.to_string(),
        ]
    }
}

/// Empirical rate of lower bounds above the true value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRate {
    pub beta0: f64,
    pub n: usize,
    pub method: BoundMethod,
    pub rate: f64,
    pub reps: usize,
}

/// For every replication and β₀: a fresh environment (unless `fix_env`),
/// an evaluation policy (softmax over an LR reward model fitted on
/// `n_train` logged rows), and one validation set per size in `n`, each
/// bounded by all three methods.
pub fn run_bounds_study(cfg: &ExperimentConfig) -> Result<Vec<BoundsRow>> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &beta0 in &cfg.beta0 {
        for rep in 0..cfg.reps {
            jobs.push((beta0, rep));
        }
    }
    let run = |&(beta0, rep): &(f64, usize)| -> Result<Vec<BoundsRow>> {
        let seeds = RunSeeds::new(cfg.seed, rep, cfg.fix_env);
        let env = environment(&seeds)?;
        let logging = softmax_logging_policy(env.clone(), beta0);
        let train = sample_logged_data(&env, &logging, cfg.n_train, seeds.train())?;
        let model = RewardModel::Logistic(fit_logistic(&train, &EVAL_LR, 0)?);
        let policy = SoftmaxPolicy::new(Arc::new(model), EVAL_BETA);
        let pool = TestPool::new(&env, cfg.n_test, seeds.pool())?;
        let v_true = pool.value(&policy);
        let mut rows = Vec::new();
        for (j, &n) in cfg.n.iter().enumerate() {
            let val = sample_logged_data(&env, &logging, n, derive_seed(seeds.val(), j as u64))?;
            let terms = ips(&policy, &val)?;
            let w_max = empirical_w_max(&policy, &logging, &val)?;
            for method in BoundMethod::ALL {
                let b = lower_bound(&terms, method, cfg.delta, w_max)?;
                rows.push(BoundsRow {
                    seed: rep,
                    beta0,
                    n,
                    method,
                    delta: cfg.delta,
                    estimate: b.estimate,
                    lower_bound: b.lower_bound,
                    v_true,
                    violated: b.lower_bound > v_true,
                });
            }
        }
        Ok(rows)
    };
    let chunks = cfg.thread_pool()?.install(|| jobs.par_iter().map(run).collect::<Result<Vec<_>>>())?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Violation rates per (β₀, n, method), in first-appearance order.
pub fn bounds_error_rates(rows: &[BoundsRow]) -> Vec<ErrorRate> {
    let mut out: Vec<(ErrorRate, usize)> = Vec::new();
    for r in rows {
        let slot = out.iter_mut().find(|(e, _)| e.beta0 == r.beta0 && e.n == r.n && e.method == r.method);
        match slot {
            Some((e, v)) => {
                e.reps += 1;
                *v += r.violated as usize;
            }
            None => out.push((
                ErrorRate { beta0: r.beta0, n: r.n, method: r.method, rate: 0.0, reps: 1 },
                r.violated as usize,
            )),
        }
    }
    out.into_iter().map(|(e, v)| ErrorRate { rate: v as f64 / e.reps as f64, ..e }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_study_has_expected_shape() {
        let cfg = ExperimentConfig {
            beta0: vec![3.0],
            n: vec![100, 400],
            reps: 4,
            delta: 0.05,
            n_train: 200,
            n_test: 1000,
            workers: 1,
            ..Default::default()
        };
        let rows = run_bounds_study(&cfg).unwrap();
        assert_eq!(rows.len(), 4 * 2 * 3);
        for r in &rows {
            assert!(r.lower_bound <= r.estimate);
        }
        let rates = bounds_error_rates(&rows);
        assert_eq!(rates.len(), 6);
        assert!(rates.iter().all(|e| e.reps == 4));
    }
}
