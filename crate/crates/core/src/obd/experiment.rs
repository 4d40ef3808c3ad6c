use serde::{Deserialize, Serialize};

use crate::data::LoggedDataset;
use crate::error::{invalid, Result};
use crate::harness::output::{fmt_float, CsvRow};
use crate::hpo::air::{DEFAULT_ALPHA_INIT, DEFAULT_DELTA, DEFAULT_GAMMA};
use crate::hpo::{
    build_policy, run_hpo, trial_model_seed, Algo, Estimator, HpoProblem, HpoSettings, Sampler, SamplerKind,
    SearchSpace,
};
use crate::ope::ips;
use crate::policy::{MixturePolicy, Policy, TabularPolicy};
use crate::rng::{stream_seed, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObdConfig {
    pub trials: usize,
    pub sampler: SamplerKind,
    pub delta: f64,
    pub gamma: f64,
    pub alpha_init: f64,
    pub seed: u64,
    /// Fraction of the training logs used to fit reward models; the rest validates.
    pub train_fraction: f64,
}

impl Default for ObdConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            sampler: SamplerKind::Tpe,
            delta: DEFAULT_DELTA,
            gamma: DEFAULT_GAMMA,
            alpha_init: DEFAULT_ALPHA_INIT,
            seed: 0,
            train_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObdRow {
    pub algo: Algo,
    pub surrogate: Estimator,
    pub test_value_ips: f64,
}

impl CsvRow for ObdRow {
    const HEADER: &'static [&'static str] = &["algo", "surrogate", "test_value_ips"];

    fn record(&self) -> Vec<String> {
        vec![self.algo.to_string(), self.surrogate.as_str().into(), fmt_float(self.test_value_ips)]
    }
}

/// Context-free stand-in for the logging policy: its empirical action
/// frequencies. Real logs only record π₀ at the logged action, while the
/// mixture and the DR surrogate need it at every action.
pub fn empirical_logging_policy(data: &LoggedDataset) -> Result<TabularPolicy> {
    let mut counts = vec![0.0; data.n_actions()];
    for &a in data.actions() {
        counts[a] += 1.0;
    }
    TabularPolicy::from_weights(counts)
}

/// Tunes Baseline and CIR-HPO with IPS and DR surrogates on `train_logs` and
/// scores each returned policy by IPS on `test_logs`.
pub fn obd_experiment(train_logs: &LoggedDataset, test_logs: &LoggedDataset, cfg: &ObdConfig) -> Result<Vec<ObdRow>> {
    if train_logs.d_x() != test_logs.d_x() || train_logs.n_actions() != test_logs.n_actions() {
        return invalid("training and test logs must share context encoding and action set");
    }
    let (train, val) = train_logs.split(cfg.train_fraction, stream_seed(cfg.seed, Stream::Split))?;
    let logging = empirical_logging_policy(train_logs)?;
    let space = SearchSpace::default();
    let problem = HpoProblem {
        space: &space,
        sampler: Sampler::from_kind(cfg.sampler),
        train: &train,
        val: &val,
        logging: &logging,
        oracle: None,
    };
    let mut rows = Vec::new();
    for algo in [Algo::Baseline, Algo::Cir] {
        for surrogate in [Estimator::Ips, Estimator::Dr] {
            let settings = HpoSettings {
                surrogate,
                delta: cfg.delta,
                gamma: cfg.gamma,
                alpha_init: cfg.alpha_init,
                ..HpoSettings::for_algo(algo, cfg.trials, cfg.seed)
            };
            let outcome = run_hpo(&problem, &settings)?;
            let test_value_ips = match (outcome.best_theta, outcome.trials.iter().rposition(|r| r.incumbent)) {
                (Some(theta), Some(i)) => {
                    let candidate = build_policy(&theta, &train, trial_model_seed(cfg.seed, outcome.trials[i].t))?;
                    let tuned = MixturePolicy::new(candidate, logging.clone(), outcome.best_alpha)?;
                    test_value(&tuned, test_logs)?
                }
                _ => test_value(&logging, test_logs)?,
            };
            rows.push(ObdRow { algo, surrogate, test_value_ips });
        }
    }
    Ok(rows)
}

fn test_value<P: Policy>(policy: &P, test: &LoggedDataset) -> Result<f64> {
    Ok(ips(policy, test)?.mean())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::UniformPolicy;

    fn logs(n: usize, k: usize, uniform: bool) -> LoggedDataset {
        let contexts: Vec<f64> = (0..n * 2).map(|i| ((i * 37) % 11) as f64 / 11.0).collect();
        let actions: Vec<usize> = (0..n).map(|i| (i * 7) % k).collect();
        let rewards: Vec<f64> = (0..n).map(|i| ((i % 5 == 0) as u8) as f64).collect();
        let props =
            if uniform { vec![1.0 / k as f64; n] } else { (0..n).map(|i| 0.1 + 0.05 * (i % 4) as f64).collect() };
        LoggedDataset::new(2, k, 1.0, contexts, actions, rewards, props).unwrap()
    }

    #[test]
    fn uniform_policy_scores_mean_click_rate() {
        let test = logs(40, 4, true);
        let v = test_value(&UniformPolicy::new(4).unwrap(), &test).unwrap();
        assert!((v - test.mean_reward()).abs() < 1e-12);
    }

    #[test]
    fn produces_two_by_two_report() {
        let cfg = ObdConfig { trials: 4, ..Default::default() };
        let rows = obd_experiment(&logs(60, 4, false), &logs(40, 4, true), &cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.test_value_ips.is_finite()));
    }

    #[test]
    fn empirical_logging_frequencies() {
        let p = empirical_logging_policy(&logs(8, 4, false)).unwrap();
        assert_eq!(p.probs(), &[0.25, 0.25, 0.25, 0.25]);
    }
}
