//! The two HPO procedures: the typical loop with an IPS (or DR) point
//! estimate as surrogate, and the conservative, imitation-regularized variant.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::air::{air_score_from_logged, AirState, DEFAULT_ALPHA_INIT, DEFAULT_DELTA, DEFAULT_GAMMA};
use super::space::{HyperparamPoint, ModelBlock, SearchSpace};
use super::tpe::{Observation, Sampler};
use crate::data::LoggedDataset;
use crate::env::TestPool;
use crate::error::{invalid, Result};
use crate::model::{fit_forest, fit_logistic, RewardModel};
use crate::ope::{
    dr_from_tables, ips_from_logged, lower_bound_ttest, prediction_table, regret_report, EstimateTerms, GridPoint,
    RegretReport,
};
use crate::policy::{Policy, PolicyTable, SoftmaxPolicy};
use crate::rng::{derive_seed, stream_rng, stream_seed, Stream};

/// Off-policy estimator used as the HPO surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Ips,
    Dr,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Ips => "ips",
            Estimator::Dr => "dr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algo {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "cir")]
    Cir,
    #[serde(rename = "cir-no-cso")]
    CirNoCso,
    #[serde(rename = "cir-no-air")]
    CirNoAir,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::Baseline, Algo::Cir, Algo::CirNoCso, Algo::CirNoAir];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Baseline => "baseline",
            Algo::Cir => "cir",
            Algo::CirNoCso => "cir-no-cso",
            Algo::CirNoAir => "cir-no-air",
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Algo::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| format!("unknown algo {s:?}"))
    }
}

/// When a trial replaces the incumbent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncumbentRule {
    /// Strictly better objective.
    Strict,
    /// Better or equal objective.
    NonStrict,
}

impl IncumbentRule {
    fn replaces(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            IncumbentRule::Strict => candidate > incumbent,
            IncumbentRule::NonStrict => candidate >= incumbent,
        }
    }
}

/// What the incumbent is before the first trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncumbentStart {
    /// The logging policy, scored like a candidate; trials must beat it.
    Logging,
    /// No incumbent: the first trial is always accepted.
    FirstTrial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpoSettings {
    pub trials: usize,
    pub surrogate: Estimator,
    /// Optimize the t-test lower bound instead of the point estimate.
    pub conservative: bool,
    /// Mix candidates with the logging policy using the adaptive α_t.
    pub imitation: bool,
    pub incumbent_rule: IncumbentRule,
    pub incumbent_start: IncumbentStart,
    pub delta: f64,
    pub gamma: f64,
    pub alpha_init: f64,
    pub seed: u64,
}

impl HpoSettings {
    pub fn for_algo(algo: Algo, trials: usize, seed: u64) -> Self {
        let base = Self {
            trials,
            surrogate: Estimator::Ips,
            conservative: true,
            imitation: true,
            incumbent_rule: IncumbentRule::NonStrict,
            incumbent_start: IncumbentStart::FirstTrial,
            delta: DEFAULT_DELTA,
            gamma: DEFAULT_GAMMA,
            alpha_init: DEFAULT_ALPHA_INIT,
            seed,
        };
        match algo {
            Algo::Baseline => Self {
                conservative: false,
                imitation: false,
                incumbent_rule: IncumbentRule::Strict,
                incumbent_start: IncumbentStart::Logging,
                ..base
            },
            Algo::Cir => base,
            Algo::CirNoCso => Self { conservative: false, ..base },
            Algo::CirNoAir => Self { imitation: false, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return invalid("the trial budget must be at least 1");
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return invalid(format!("delta must lie in (0, 0.5], got {}", self.delta));
        }
        AirState::new(self.alpha_init, self.gamma, self.delta, self.trials).map(|_| ())
    }
}

/// One row of the trial ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// 1-based trial index.
    pub t: usize,
    pub theta: HyperparamPoint,
    /// The value the sampler observed.
    pub objective: f64,
    /// Surrogate point estimate of the evaluated (possibly mixed) policy.
    pub v_ips_val: f64,
    /// t-test lower bound of the same policy.
    pub v_lower_val: f64,
    pub alpha_t: f64,
    pub s_t: i8,
    /// Ground-truth value, when an oracle is available; never shown to the sampler.
    pub v_true: Option<f64>,
    /// This trial became the incumbent.
    pub incumbent: bool,
}

impl TrialRecord {
    pub fn tau(&self) -> Option<f64> {
        self.v_true.map(|v| self.v_ips_val - v)
    }
}

/// Value of the incumbent after some trial, in both coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncumbentPoint {
    pub val: f64,
    pub gen: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpoOutcome {
    /// `None` keeps the logging policy.
    pub best_theta: Option<HyperparamPoint>,
    /// α attached to the returned policy (0 unless imitation is on).
    pub best_alpha: f64,
    pub trials: Vec<TrialRecord>,
    /// Surrogate estimate of the logging policy on the validation data.
    pub logging_val: f64,
    pub logging_objective: f64,
    pub logging_true: Option<f64>,
}

impl HpoOutcome {
    /// Incumbent value after each trial; starts from the logging policy.
    pub fn incumbent_curve(&self) -> Vec<IncumbentPoint> {
        let mut current = IncumbentPoint { val: self.logging_val, gen: self.logging_true };
        self.trials
            .iter()
            .map(|r| {
                if r.incumbent {
                    current = IncumbentPoint { val: r.v_ips_val, gen: r.v_true };
                }
                current
            })
            .collect()
    }

    pub fn final_incumbent(&self) -> IncumbentPoint {
        self.incumbent_curve()
            .last()
            .copied()
            .unwrap_or(IncumbentPoint { val: self.logging_val, gen: self.logging_true })
    }

    /// α of the last trial.
    pub fn final_alpha(&self) -> f64 {
        self.trials.last().map_or(0.0, |r| r.alpha_t)
    }

    /// Regret decomposition over the evaluated points (the logging policy
    /// first, then every trial), with the returned solution as the choice.
    /// `None` without ground truth.
    pub fn regret_report(&self) -> Option<RegretReport> {
        let mut grid = vec![GridPoint { v_true: self.logging_true?, v_hat: self.logging_val }];
        for r in &self.trials {
            grid.push(GridPoint { v_true: r.v_true?, v_hat: r.v_ips_val });
        }
        let chosen = self.trials.iter().rposition(|r| r.incumbent).map_or(0, |i| i + 1);
        regret_report(&grid, chosen).ok()
    }
}

/// Ground truth for analysis only; the samplers never see its output.
pub trait ValueOracle: Sync {
    fn value(&self, policy: &dyn Policy) -> f64;
}

impl ValueOracle for TestPool {
    fn value(&self, policy: &dyn Policy) -> f64 {
        TestPool::value(self, policy)
    }
}

/// Inputs shared by both procedures.
pub struct HpoProblem<'a> {
    pub space: &'a SearchSpace,
    pub sampler: Sampler,
    pub train: &'a LoggedDataset,
    pub val: &'a LoggedDataset,
    pub logging: &'a dyn Policy,
    pub oracle: Option<&'a dyn ValueOracle>,
}

pub fn fit_reward_model(theta: &HyperparamPoint, data: &LoggedDataset, seed: u64) -> Result<RewardModel> {
    Ok(match &theta.model {
        ModelBlock::Logistic(hp) => RewardModel::Logistic(fit_logistic(data, hp, seed)?),
        ModelBlock::Forest(hp) => RewardModel::Forest(fit_forest(data, hp, seed)?),
    })
}

/// Seed used to fit the reward model of trial `t` (1-based).
pub fn trial_model_seed(seed: u64, t: usize) -> u64 {
    derive_seed(stream_seed(seed, Stream::Model), t as u64)
}

/// The softmax policy of trial θ fitted on `train`.
pub fn build_policy(theta: &HyperparamPoint, train: &LoggedDataset, model_seed: u64) -> Result<SoftmaxPolicy> {
    let model = fit_reward_model(theta, train, model_seed)?;
    Ok(SoftmaxPolicy::new(Arc::new(model), theta.beta))
}

/// Runs the HPO loop configured by `settings`.
pub fn run_hpo(problem: &HpoProblem<'_>, settings: &HpoSettings) -> Result<HpoOutcome> {
    settings.validate()?;
    problem.space.validate()?;
    let val = problem.val;
    if val.len() < 2 || problem.train.is_empty() {
        return invalid("HPO needs a non-empty training set and at least 2 validation rows");
    }
    let logging_table = PolicyTable::tabulate(problem.logging, val);
    let logging_logged = logging_table.logged_probs(val);
    let logging_terms = ips_from_logged(&logging_logged, val)?;
    let logging_val = logging_terms.mean();
    let logging_lower = lower_bound_ttest(&logging_terms, settings.delta)?.lower_bound;
    let logging_objective = if settings.conservative { logging_lower } else { logging_val };
    let logging_true = problem.oracle.map(|o| o.value(problem.logging));

    let mut air = AirState::new(settings.alpha_init, settings.gamma, settings.delta, settings.trials)?;
    let mut rng = stream_rng(settings.seed, Stream::Sampler);
    let mut history: Vec<Observation> = Vec::with_capacity(settings.trials);
    let mut trials = Vec::with_capacity(settings.trials);
    let mut best_objective = match settings.incumbent_start {
        IncumbentStart::Logging => logging_objective,
        IncumbentStart::FirstTrial => f64::NEG_INFINITY,
    };
    let mut best_theta = None;
    let mut best_alpha = 0.0;

    for t in 1..=settings.trials {
        let theta = problem.sampler.suggest(&history, problem.space, &mut rng);
        let policy = build_policy(&theta, problem.train, trial_model_seed(settings.seed, t))?;
        let table = PolicyTable::tabulate(&policy, val);
        let logged = table.logged_probs(val);

        let (s_t, alpha_t) = if settings.imitation {
            let s = air_score_from_logged(&logging_logged, &logged, val, settings.delta)?;
            air.push(s);
            (s, air.alpha())
        } else {
            (0, 0.0)
        };

        let terms = surrogate_terms(settings.surrogate, &policy, &table, &logging_table, alpha_t, val)?;
        let v_ips_val = terms.mean();
        let v_lower_val = lower_bound_ttest(&terms, settings.delta)?.lower_bound;
        let objective = if settings.conservative { v_lower_val } else { v_ips_val };

        let incumbent = settings.incumbent_rule.replaces(objective, best_objective);
        if incumbent {
            best_objective = objective;
            best_theta = Some(theta);
            best_alpha = alpha_t;
        }
        let v_true = match (problem.oracle, logging_true) {
            (Some(oracle), Some(v0)) => {
                let v_hat = oracle.value(&policy);
                Some(if alpha_t == 0.0 {
                    v_hat
                } else if alpha_t == 1.0 {
                    v0
                } else {
                    (1.0 - alpha_t) * v_hat + alpha_t * v0
                })
            }
            _ => None,
        };
        history.push(Observation { point: theta, objective });
        trials.push(TrialRecord { t, theta, objective, v_ips_val, v_lower_val, alpha_t, s_t, v_true, incumbent });
    }

    Ok(HpoOutcome { best_theta, best_alpha, trials, logging_val, logging_objective, logging_true })
}

fn surrogate_terms(
    estimator: Estimator,
    policy: &SoftmaxPolicy,
    table: &PolicyTable,
    logging_table: &PolicyTable,
    alpha: f64,
    val: &LoggedDataset,
) -> Result<EstimateTerms> {
    let mixed = table.mix(logging_table, alpha)?;
    match estimator {
        Estimator::Ips => ips_from_logged(&mixed.logged_probs(val), val),
        Estimator::Dr => dr_from_tables(&mixed, &prediction_table(policy.model(), val), val),
    }
}

/// Algorithm with strict improvement over the logging policy and a point
/// estimate as objective.
pub fn baseline_hpo(problem: &HpoProblem<'_>, trials: usize, seed: u64) -> Result<HpoOutcome> {
    run_hpo(problem, &HpoSettings::for_algo(Algo::Baseline, trials, seed))
}

/// Conservative and imitation-regularized HPO.
#[allow(clippy::too_many_arguments)]
pub fn cir_hpo(
    problem: &HpoProblem<'_>,
    trials: usize,
    delta: f64,
    gamma: f64,
    alpha_init: f64,
    seed: u64,
    enable_cso: bool,
    enable_air: bool,
) -> Result<HpoOutcome> {
    let settings = HpoSettings {
        delta,
        gamma,
        alpha_init,
        conservative: enable_cso,
        imitation: enable_air,
        ..HpoSettings::for_algo(Algo::Cir, trials, seed)
    };
    run_hpo(problem, &settings)
}
