//! Hyperparameter optimization for off-policy learning: the conditional
//! search space, random and TPE samplers, adaptive imitation regularization
//! and the two HPO procedures.

pub mod air;
pub mod procedure;
pub mod space;
pub mod tpe;

pub use air::{air_alpha, air_score, air_score_from_logged, score_from_paired, AirState};
pub use procedure::{
    baseline_hpo, build_policy, cir_hpo, fit_reward_model, run_hpo, trial_model_seed, Algo, Estimator, HpoOutcome,
    HpoProblem, HpoSettings, IncumbentPoint, IncumbentRule, IncumbentStart, TrialRecord, ValueOracle,
};
pub use space::{sample_random, Dimension, Domain, HyperparamPoint, ModelBlock, SearchSpace};
pub use tpe::{tpe_suggest, Observation, Sampler, SamplerKind, TpeConfig};
