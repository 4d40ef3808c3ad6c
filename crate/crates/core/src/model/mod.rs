//! Reward regression models μ̂(x, a) fitted on logged data.
//!
//! Both families see the same feature map φ(x, a) = [x, one_hot(a)].

mod forest;
mod logistic;

use serde::{Deserialize, Serialize};

pub use forest::{fit_forest, DecisionTree, ForestModel, RfHyperparams, TreeNode, FOREST_SIZE};
pub use logistic::{fit_logistic, fit_logistic_traced, LogisticModel, LrHyperparams};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelFamily {
    #[serde(rename = "LR")]
    LogisticRegression,
    #[serde(rename = "RF")]
    RandomForest,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 2] = [ModelFamily::LogisticRegression, ModelFamily::RandomForest];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::LogisticRegression => "LR",
            ModelFamily::RandomForest => "RF",
        }
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fitted, immutable reward model.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardModel {
    Logistic(LogisticModel),
    Forest(ForestModel),
}

impl RewardModel {
    /// Model predicting `value` everywhere (zero weights, intercept logit(value)).
    pub fn constant(d_x: usize, n_actions: usize, value: f64) -> Self {
        let v = value.clamp(1e-12, 1.0 - 1e-12);
        RewardModel::Logistic(LogisticModel::from_weights(vec![0.0; d_x], vec![0.0; n_actions], (v / (1.0 - v)).ln()))
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            RewardModel::Logistic(_) => ModelFamily::LogisticRegression,
            RewardModel::Forest(_) => ModelFamily::RandomForest,
        }
    }

    pub fn d_x(&self) -> usize {
        match self {
            RewardModel::Logistic(m) => m.d_x(),
            RewardModel::Forest(m) => m.d_x(),
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            RewardModel::Logistic(m) => m.n_actions(),
            RewardModel::Forest(m) => m.n_actions(),
        }
    }

    pub fn predict(&self, x: &[f64], a: usize) -> Result<f64> {
        if x.len() != self.d_x() {
            return invalid(format!("context has {} dims, model expects {}", x.len(), self.d_x()));
        }
        if a >= self.n_actions() {
            return invalid(format!("action {a} out of range ({} actions)", self.n_actions()));
        }
        Ok(match self {
            RewardModel::Logistic(m) => m.predict_one(x, a),
            RewardModel::Forest(m) => m.predict_one(x, a),
        })
    }

    /// μ̂(x, ·) for every action; `x` must match the model's context width.
    pub fn predict_all(&self, x: &[f64], out: &mut [f64]) {
        match self {
            RewardModel::Logistic(m) => m.predict_all(x, out),
            RewardModel::Forest(m) => m.predict_all(x, out),
        }
    }
}

pub fn predict(model: &RewardModel, x: &[f64], a: usize) -> Result<f64> {
    model.predict(x, a)
}

/// Regression targets r / r_max in [0, 1].
pub(crate) fn targets(data: &crate::data::LoggedDataset) -> Vec<f64> {
    let r_max = data.r_max();
    data.rewards().iter().map(|r| r / r_max).collect()
}
