//! Adaptive imitation regularization: significance-tested comparisons of the
//! logging policy against each candidate drive the mixing weight α_t.

use serde::{Deserialize, Serialize};

use crate::data::LoggedDataset;
use crate::error::{invalid, Result};
use crate::ope::{paired_t_from_logged, t_quantile, PairedT};

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_GAMMA: f64 = 0.01;
pub const DEFAULT_ALPHA_INIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirState {
    score_sum: i64,
    t: usize,
    pub alpha_init: f64,
    pub gamma: f64,
    pub delta: f64,
    pub budget: usize,
}

impl AirState {
    pub fn new(alpha_init: f64, gamma: f64, delta: f64, budget: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha_init) {
            return invalid(format!("alpha_init must lie in [0, 1], got {alpha_init}"));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return invalid(format!("gamma must be positive, got {gamma}"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return invalid(format!("delta must lie in (0, 1), got {delta}"));
        }
        if budget == 0 {
            return invalid("trial budget must be at least 1");
        }
        Ok(Self { score_sum: 0, t: 0, alpha_init, gamma, delta, budget })
    }

    pub fn push(&mut self, score: i8) {
        debug_assert!((-1..=1).contains(&score));
        self.score_sum += score as i64;
        self.t += 1;
    }

    pub fn score_sum(&self) -> i64 {
        self.score_sum
    }

    pub fn trials(&self) -> usize {
        self.t
    }

    /// α after the scores pushed so far.
    pub fn alpha(&self) -> f64 {
        air_alpha(self, self.t)
    }
}

/// α_t = α_init + (1 − α_init)(t/T)^γ Σs / t, clipped to [0, 1].
pub fn air_alpha(state: &AirState, t: usize) -> f64 {
    if t == 0 || state.score_sum == 0 {
        return state.alpha_init;
    }
    let frac = (t as f64 / state.budget as f64).powf(state.gamma);
    let alpha = state.alpha_init + (1.0 - state.alpha_init) * frac * state.score_sum as f64 / t as f64;
    alpha.clamp(0.0, 1.0)
}

/// Score from pre-computed logged-action probabilities of π₀ and the candidate.
pub fn air_score_from_logged(logging: &[f64], candidate: &[f64], data: &LoggedDataset, delta: f64) -> Result<i8> {
    if data.len() < 2 {
        return invalid("AIR score needs at least 2 validation samples");
    }
    let paired = paired_t_from_logged(logging, candidate, data)?;
    Ok(score_from_paired(&paired, data.len(), delta))
}

/// s = ±1 when T reaches t_{1−δ/2, n−1} (sign of the mean difference), else 0.
pub fn score_from_paired(paired: &PairedT, n: usize, delta: f64) -> i8 {
    let threshold = t_quantile(1.0 - delta / 2.0, n as f64 - 1.0);
    if paired.statistic >= threshold {
        if paired.mean_delta >= 0.0 {
            1
        } else {
            -1
        }
    } else {
        0
    }
}

/// +1 when π₀ is significantly better than the candidate, −1 when worse.
pub fn air_score<P, Q>(logging: &P, candidate: &Q, data: &LoggedDataset, delta: f64) -> Result<i8>
where
    P: crate::policy::Policy + ?Sized,
    Q: crate::policy::Policy + ?Sized,
{
    let logged = |p: &dyn Fn(&[f64], usize) -> f64| -> Vec<f64> {
        (0..data.len()).map(|i| p(data.context(i), data.action(i))).collect()
    };
    let p0 = logged(&|x, a| logging.action_prob(x, a));
    let p1 = logged(&|x, a| candidate.action_prob(x, a));
    air_score_from_logged(&p0, &p1, data, delta)
}
