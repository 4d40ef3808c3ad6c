//! Counterfactual learning lab: synthetic bandit environments, reward models,
//! off-policy estimators with confidence lower bounds, and safe
//! hyperparameter optimization for off-policy learning.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod env;
pub mod error;
pub mod harness;
pub mod hpo;
pub mod model;
pub mod obd;
pub mod ope;
pub mod policy;
pub mod rng;

pub use data::{LoggedDataset, Sample};
pub use env::{
    optimal_value, sample_environment, sample_logged_data, softmax_logging_policy, true_value, LoggingPolicy,
    OptimalPolicy, SyntheticEnvironment, TestPool,
};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentKind};
pub use hpo::{Algo, Estimator, HpoOutcome, HyperparamPoint, SamplerKind, SearchSpace, TrialRecord};
pub use model::{ModelFamily, RewardModel};
pub use policy::{MixturePolicy, Policy, PolicyTable, SoftmaxPolicy, TabularPolicy, UniformPolicy};
