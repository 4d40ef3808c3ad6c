//! Elastic-net logistic regression solved by proximal gradient (ISTA with
//! backtracking), specialised to φ(x, a) = [x, one_hot(a)].

use serde::{Deserialize, Serialize};

use super::targets;
use crate::data::LoggedDataset;
use crate::env::sigmoid;
use crate::error::{invalid, Result};

const MAX_EPOCHS: usize = 1000;
const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrHyperparams {
    /// Inverse regularization strength.
    pub c: f64,
    pub l1_ratio: f64,
}

impl LrHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return invalid(format!("C must be positive, got {}", self.c));
        }
        if !(self.l1_ratio > 0.0 && self.l1_ratio < 1.0) {
            return invalid(format!("l1_ratio must lie in (0, 1), got {}", self.l1_ratio));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    context_weights: Vec<f64>,
    action_weights: Vec<f64>,
    intercept: f64,
}

impl LogisticModel {
    pub fn from_weights(context_weights: Vec<f64>, action_weights: Vec<f64>, intercept: f64) -> Self {
        Self { context_weights, action_weights, intercept }
    }

    pub fn d_x(&self) -> usize {
        self.context_weights.len()
    }

    pub fn n_actions(&self) -> usize {
        self.action_weights.len()
    }

    pub fn context_weights(&self) -> &[f64] {
        &self.context_weights
    }

    pub fn action_weights(&self) -> &[f64] {
        &self.action_weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub(crate) fn predict_one(&self, x: &[f64], a: usize) -> f64 {
        sigmoid(dot(&self.context_weights, x) + self.action_weights[a] + self.intercept)
    }

    pub(crate) fn predict_all(&self, x: &[f64], out: &mut [f64]) {
        let shared = dot(&self.context_weights, x) + self.intercept;
        for (o, w) in out.iter_mut().zip(&self.action_weights) {
            *o = sigmoid(shared + w);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Parameters packed as [context weights | action weights | intercept].
struct Problem<'a> {
    data: &'a LoggedDataset,
    y: Vec<f64>,
    d_x: usize,
    l1: f64,
    l2: f64,
}

impl Problem<'_> {
    fn n_weights(&self) -> usize {
        self.d_x + self.data.n_actions()
    }

    fn logits(&self, theta: &[f64], out: &mut [f64]) {
        let (wx, rest) = theta.split_at(self.d_x);
        let (wa, b) = rest.split_at(self.data.n_actions());
        for (i, z) in out.iter_mut().enumerate() {
            *z = dot(wx, self.data.context(i)) + wa[self.data.action(i)] + b[0];
        }
    }

    /// Mean log-loss plus the ridge part of the penalty.
    fn smooth(&self, theta: &[f64], z: &[f64]) -> f64 {
        let n = z.len() as f64;
        let loss: f64 = z.iter().zip(&self.y).map(|(&z, &y)| softplus(z) - y * z).sum::<f64>() / n;
        let ridge: f64 = theta[..self.n_weights()].iter().map(|w| w * w).sum();
        loss + 0.5 * self.l2 * ridge
    }

    fn l1_penalty(&self, theta: &[f64]) -> f64 {
        self.l1 * theta[..self.n_weights()].iter().map(|w| w.abs()).sum::<f64>()
    }

    fn gradient(&self, theta: &[f64], z: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
        let n = z.len() as f64;
        let na = self.data.n_actions();
        for (i, (&zi, &yi)) in z.iter().zip(&self.y).enumerate() {
            let r = (sigmoid(zi) - yi) / n;
            for (g, x) in grad[..self.d_x].iter_mut().zip(self.data.context(i)) {
                *g += r * x;
            }
            grad[self.d_x + self.data.action(i)] += r;
            grad[self.d_x + na] += r;
        }
        for (g, w) in grad[..self.n_weights()].iter_mut().zip(theta) {
            *g += self.l2 * w;
        }
    }

    /// Largest eigenvalue of ΦᵀΦ/n (intercept column included), by power
    /// iteration. Only a starting point for the backtracking search.
    fn gram_norm(&self) -> f64 {
        let p = self.n_weights() + 1;
        let n = self.data.len();
        let mut v = vec![1.0 / (p as f64).sqrt(); p];
        let mut z = vec![0.0; n];
        let mut w = vec![0.0; p];
        let mut lambda = 1.0;
        for _ in 0..30 {
            self.logits(&v, &mut z);
            w.fill(0.0);
            for (i, &zi) in z.iter().enumerate() {
                for (g, x) in w[..self.d_x].iter_mut().zip(self.data.context(i)) {
                    *g += zi * x;
                }
                w[self.d_x + self.data.action(i)] += zi;
                w[p - 1] += zi;
            }
            let norm = w.iter().map(|u| u * u).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            lambda = norm / n as f64;
            v.iter_mut().zip(&w).for_each(|(a, b)| *a = b / norm);
        }
        lambda
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Fits μ̂ and returns the full objective after every epoch (index 0 is the
/// starting point).
pub fn fit_logistic_traced(data: &LoggedDataset, hp: &LrHyperparams) -> Result<(LogisticModel, Vec<f64>)> {
    hp.validate()?;
    if data.is_empty() {
        return invalid("cannot fit a reward model on an empty dataset");
    }
    let n = data.len();
    let y = targets(data);
    let strength = 1.0 / (hp.c * n as f64);
    let problem = Problem { data, y, d_x: data.d_x(), l1: strength * hp.l1_ratio, l2: strength * (1.0 - hp.l1_ratio) };
    let p = problem.n_weights();

    // Start at the intercept-only optimum so heavy penalties still recover the base rate.
    let mut theta = vec![0.0; p + 1];
    let base = (problem.y.iter().sum::<f64>() / n as f64).clamp(0.5 / n as f64, 1.0 - 0.5 / n as f64);
    theta[p] = (base / (1.0 - base)).ln();

    let mut z = vec![0.0; n];
    let mut z_next = vec![0.0; n];
    let mut grad = vec![0.0; p + 1];
    let mut next = vec![0.0; p + 1];
    let mut lipschitz = 0.25 * problem.gram_norm() + problem.l2;

    problem.logits(&theta, &mut z);
    let mut smooth = problem.smooth(&theta, &z);
    let mut trace = vec![smooth + problem.l1_penalty(&theta)];

    for _ in 0..MAX_EPOCHS {
        problem.gradient(&theta, &z, &mut grad);
        let smooth_next = loop {
            let step = 1.0 / lipschitz;
            for j in 0..=p {
                let v = theta[j] - step * grad[j];
                next[j] = if j < p { soft_threshold(v, step * problem.l1) } else { v };
            }
            problem.logits(&next, &mut z_next);
            let candidate = problem.smooth(&next, &z_next);
            let mut model_bound = smooth;
            let mut dist = 0.0;
            for j in 0..=p {
                let d = next[j] - theta[j];
                model_bound += grad[j] * d;
                dist += d * d;
            }
            model_bound += 0.5 * lipschitz * dist;
            if candidate <= model_bound + 1e-15 || lipschitz > 1e12 {
                break candidate;
            }
            lipschitz *= 2.0;
        };
        let change = theta.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut theta, &mut next);
        std::mem::swap(&mut z, &mut z_next);
        smooth = smooth_next;
        trace.push(smooth + problem.l1_penalty(&theta));
        if change < TOLERANCE {
            break;
        }
    }

    let d_x = data.d_x();
    let model = LogisticModel {
        context_weights: theta[..d_x].to_vec(),
        action_weights: theta[d_x..p].to_vec(),
        intercept: theta[p],
    };
    Ok((model, trace))
}

/// Elastic-net logistic regression on φ(x, a). Deterministic; `seed` is
/// accepted for interface symmetry with the forest.
pub fn fit_logistic(data: &LoggedDataset, hp: &LrHyperparams, _seed: u64) -> Result<LogisticModel> {
    fit_logistic_traced(data, hp).map(|(m, _)| m)
}
