//! Policies: conditional action distributions π(a|x).
//!
//! Policies are evaluated on demand from a context vector, so the same
//! interface serves synthetic and logged (OBD) contexts. Callers that
//! evaluate one policy over a fixed dataset many times should go through
//! [`PolicyTable`].

use std::sync::Arc;

use crate::data::LoggedDataset;
use crate::error::{invalid, Result};
use crate::model::RewardModel;

pub trait Policy: Send + Sync {
    fn n_actions(&self) -> usize;

    /// Writes π(·|x) into `out` (length `n_actions`).
    fn action_probs(&self, context: &[f64], out: &mut [f64]);

    fn action_prob(&self, context: &[f64], action: usize) -> f64 {
        let mut buf = vec![0.0; self.n_actions()];
        self.action_probs(context, &mut buf);
        buf[action]
    }
}

impl<P: Policy + ?Sized> Policy for Arc<P> {
    fn n_actions(&self) -> usize {
        (**self).n_actions()
    }
    fn action_probs(&self, context: &[f64], out: &mut [f64]) {
        (**self).action_probs(context, out)
    }
    fn action_prob(&self, context: &[f64], action: usize) -> f64 {
        (**self).action_prob(context, action)
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn n_actions(&self) -> usize {
        (**self).n_actions()
    }
    fn action_probs(&self, context: &[f64], out: &mut [f64]) {
        (**self).action_probs(context, out)
    }
    fn action_prob(&self, context: &[f64], action: usize) -> f64 {
        (**self).action_prob(context, action)
    }
}

/// Turns `scores` into softmax(`beta`·scores) in place, subtracting the max
/// logit first.
pub fn softmax_in_place(scores: &mut [f64], beta: f64) {
    if scores.is_empty() {
        return;
    }
    if beta == 0.0 {
        let p = 1.0 / scores.len() as f64;
        scores.iter_mut().for_each(|s| *s = p);
        return;
    }
    let max = scores.iter().map(|&s| beta * s).fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (beta * *s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UniformPolicy {
    n_actions: usize,
}

impl UniformPolicy {
    pub fn new(n_actions: usize) -> Result<Self> {
        if n_actions == 0 {
            return invalid("uniform policy needs at least one action");
        }
        Ok(Self { n_actions })
    }
}

impl Policy for UniformPolicy {
    fn n_actions(&self) -> usize {
        self.n_actions
    }
    fn action_probs(&self, _context: &[f64], out: &mut [f64]) {
        out.fill(1.0 / self.n_actions as f64);
    }
    fn action_prob(&self, _context: &[f64], _action: usize) -> f64 {
        1.0 / self.n_actions as f64
    }
}

pub fn uniform_policy(n_actions: usize) -> Result<UniformPolicy> {
    UniformPolicy::new(n_actions)
}

/// π(a|x) ∝ exp(β·μ̂(x,a)).
#[derive(Debug, Clone)]
pub struct SoftmaxPolicy {
    model: Arc<RewardModel>,
    beta: f64,
}

impl SoftmaxPolicy {
    pub fn new(model: Arc<RewardModel>, beta: f64) -> Self {
        Self { model, beta }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }
}

impl Policy for SoftmaxPolicy {
    fn n_actions(&self) -> usize {
        self.model.n_actions()
    }
    fn action_probs(&self, context: &[f64], out: &mut [f64]) {
        self.model.predict_all(context, out);
        softmax_in_place(out, self.beta);
    }
}

pub fn softmax_policy(model: Arc<RewardModel>, beta: f64) -> SoftmaxPolicy {
    SoftmaxPolicy::new(model, beta)
}

/// (1−α)·candidate + α·logging.
#[derive(Clone)]
pub struct MixturePolicy<A, B> {
    candidate: A,
    logging: B,
    alpha: f64,
}

impl<A: Policy, B: Policy> MixturePolicy<A, B> {
    pub fn new(candidate: A, logging: B, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return invalid(format!("mixture weight must lie in [0, 1], got {alpha}"));
        }
        if candidate.n_actions() != logging.n_actions() {
            return invalid("mixture components disagree on the number of actions");
        }
        Ok(Self { candidate, logging, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl<A: Policy, B: Policy> Policy for MixturePolicy<A, B> {
    fn n_actions(&self) -> usize {
        self.candidate.n_actions()
    }
    fn action_probs(&self, context: &[f64], out: &mut [f64]) {
        // α ∈ {0, 1} must reproduce the component exactly.
        if self.alpha == 0.0 {
            return self.candidate.action_probs(context, out);
        }
        if self.alpha == 1.0 {
            return self.logging.action_probs(context, out);
        }
        let mut other = vec![0.0; out.len()];
        self.candidate.action_probs(context, out);
        self.logging.action_probs(context, &mut other);
        for (p, q) in out.iter_mut().zip(&other) {
            *p = (1.0 - self.alpha) * *p + self.alpha * q;
        }
    }
}

pub fn mixture_policy<A: Policy, B: Policy>(candidate: A, logging: B, alpha: f64) -> Result<MixturePolicy<A, B>> {
    MixturePolicy::new(candidate, logging, alpha)
}

/// Context-free policy given by a fixed probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    probs: Vec<f64>,
}

impl TabularPolicy {
    /// Normalizes `weights` into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("tabular policy needs at least one action");
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return invalid("tabular policy weights must be finite and non-negative");
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return invalid("tabular policy weights sum to zero");
        }
        Ok(Self { probs: weights.into_iter().map(|w| w / total).collect() })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl Policy for TabularPolicy {
    fn n_actions(&self) -> usize {
        self.probs.len()
    }
    fn action_probs(&self, _context: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.probs);
    }
    fn action_prob(&self, _context: &[f64], action: usize) -> f64 {
        self.probs[action]
    }
}

/// π(·|xᵢ) cached for every row of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    n_actions: usize,
    probs: Vec<f64>,
}

impl PolicyTable {
    pub fn tabulate<P: Policy + ?Sized>(policy: &P, data: &LoggedDataset) -> Self {
        let k = policy.n_actions();
        let mut probs = vec![0.0; data.len() * k];
        for (i, row) in probs.chunks_exact_mut(k).enumerate() {
            policy.action_probs(data.context(i), row);
        }
        Self { n_actions: k, probs }
    }

    pub fn from_rows(n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if n_actions == 0 || !probs.len().is_multiple_of(n_actions) {
            return invalid("probability table does not match the action count");
        }
        Ok(Self { n_actions, probs })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn len(&self) -> usize {
        self.probs.len() / self.n_actions
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.n_actions..(i + 1) * self.n_actions]
    }

    pub fn prob(&self, i: usize, action: usize) -> f64 {
        self.probs[i * self.n_actions + action]
    }

    /// π(aᵢ|xᵢ) for every logged row.
    pub fn logged_probs(&self, data: &LoggedDataset) -> Vec<f64> {
        (0..data.len()).map(|i| self.prob(i, data.action(i))).collect()
    }

    /// Row-wise (1−α)·self + α·other.
    pub fn mix(&self, other: &PolicyTable, alpha: f64) -> Result<PolicyTable> {
        if !(0.0..=1.0).contains(&alpha) {
            return invalid(format!("mixture weight must lie in [0, 1], got {alpha}"));
        }
        if self.n_actions != other.n_actions || self.probs.len() != other.probs.len() {
            return invalid("cannot mix probability tables of different shapes");
        }
        let probs = if alpha == 0.0 {
            self.probs.clone()
        } else if alpha == 1.0 {
            other.probs.clone()
        } else {
            self.probs.iter().zip(&other.probs).map(|(p, q)| (1.0 - alpha) * p + alpha * q).collect()
        };
        Ok(PolicyTable { n_actions: self.n_actions, probs })
    }
}
