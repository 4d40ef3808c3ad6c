//! Logged bandit feedback: (context, action, reward, logging propensity) rows.

use rand::seq::index;

use crate::error::{invalid, Result};
use crate::rng::rng_from_seed;

/// Borrowed view of one logged row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<'a> {
    pub context: &'a [f64],
    pub action: usize,
    pub reward: f64,
    pub propensity: f64,
}

/// n logged rows stored column-wise; contexts are row-major `n × d_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedDataset {
    d_x: usize,
    n_actions: usize,
    r_max: f64,
    contexts: Vec<f64>,
    actions: Vec<usize>,
    rewards: Vec<f64>,
    propensities: Vec<f64>,
}

impl LoggedDataset {
    pub fn new(
        d_x: usize,
        n_actions: usize,
        r_max: f64,
        contexts: Vec<f64>,
        actions: Vec<usize>,
        rewards: Vec<f64>,
        propensities: Vec<f64>,
    ) -> Result<Self> {
        let n = actions.len();
        if rewards.len() != n || propensities.len() != n || contexts.len() != n * d_x {
            return invalid("dataset columns have inconsistent lengths");
        }
        if n_actions == 0 {
            return invalid("dataset needs at least one action");
        }
        if !(r_max > 0.0) {
            return invalid(format!("reward bound must be positive, got {r_max}"));
        }
        for i in 0..n {
            if actions[i] >= n_actions {
                return invalid(format!("row {i}: action {} out of range", actions[i]));
            }
            let r = rewards[i];
            if !(0.0..=r_max).contains(&r) {
                return invalid(format!("row {i}: reward {r} outside [0, {r_max}]"));
            }
            let p = propensities[i];
            if !(p > 0.0 && p <= 1.0) {
                return invalid(format!("row {i}: propensity {p} outside (0, 1]"));
            }
        }
        if contexts.iter().any(|v| !v.is_finite()) {
            return invalid("contexts must be finite");
        }
        Ok(Self { d_x, n_actions, r_max, contexts, actions, rewards, propensities })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn context(&self, i: usize) -> &[f64] {
        &self.contexts[i * self.d_x..(i + 1) * self.d_x]
    }

    pub fn action(&self, i: usize) -> usize {
        self.actions[i]
    }

    pub fn reward(&self, i: usize) -> f64 {
        self.rewards[i]
    }

    pub fn propensity(&self, i: usize) -> f64 {
        self.propensities[i]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn propensities(&self) -> &[f64] {
        &self.propensities
    }

    pub fn contexts(&self) -> &[f64] {
        &self.contexts
    }

    pub fn sample(&self, i: usize) -> Sample<'_> {
        Sample {
            context: self.context(i),
            action: self.actions[i],
            reward: self.rewards[i],
            propensity: self.propensities[i],
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Sample<'_>> + '_ {
        (0..self.len()).map(move |i| self.sample(i))
    }

    pub fn mean_reward(&self) -> f64 {
        self.rewards.iter().sum::<f64>() / self.len() as f64
    }

    /// Same rows declared over `n_actions ≥ self.n_actions()` actions.
    pub fn with_n_actions(mut self, n_actions: usize) -> Result<Self> {
        if n_actions < self.n_actions {
            return invalid(format!("cannot shrink the action set from {} to {n_actions}", self.n_actions));
        }
        self.n_actions = n_actions;
        Ok(self)
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut contexts = Vec::with_capacity(indices.len() * self.d_x);
        for &i in indices {
            contexts.extend_from_slice(self.context(i));
        }
        Self {
            d_x: self.d_x,
            n_actions: self.n_actions,
            r_max: self.r_max,
            contexts,
            actions: indices.iter().map(|&i| self.actions[i]).collect(),
            rewards: indices.iter().map(|&i| self.rewards[i]).collect(),
            propensities: indices.iter().map(|&i| self.propensities[i]).collect(),
        }
    }

    /// Uniform sub-sample of `m` rows without replacement, original order kept.
    pub fn subsample(&self, m: usize, seed: u64) -> Self {
        if m >= self.len() {
            return self.clone();
        }
        let mut rng = rng_from_seed(seed);
        let mut idx = index::sample(&mut rng, self.len(), m).into_vec();
        idx.sort_unstable();
        self.select(&idx)
    }

    /// Random split into two parts; the first gets `round(fraction · n)` rows.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..=1.0).contains(&fraction) {
            return invalid(format!("split fraction must lie in [0, 1], got {fraction}"));
        }
        let n = self.len();
        let k = (fraction * n as f64).round() as usize;
        let mut rng = rng_from_seed(seed);
        let perm = index::sample(&mut rng, n, n).into_vec();
        let (mut a, mut b) = (perm[..k].to_vec(), perm[k..].to_vec());
        a.sort_unstable();
        b.sort_unstable();
        Ok((self.select(&a), self.select(&b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LoggedDataset {
        LoggedDataset::new(
            1,
            2,
            1.0,
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0, 1, 1, 0],
            vec![1.0, 0.0, 1.0, 1.0],
            vec![0.5, 0.5, 0.25, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn rejects_invariant_violations() {
        let bad_prop = LoggedDataset::new(1, 2, 1.0, vec![0.0], vec![0], vec![1.0], vec![0.0]);
        assert!(bad_prop.is_err());
        let bad_action = LoggedDataset::new(1, 2, 1.0, vec![0.0], vec![2], vec![1.0], vec![0.5]);
        assert!(bad_action.is_err());
        let bad_reward = LoggedDataset::new(1, 2, 1.0, vec![0.0], vec![0], vec![1.5], vec![0.5]);
        assert!(bad_reward.is_err());
    }

    #[test]
    fn split_partitions_rows() {
        let d = toy();
        let (a, b) = d.split(0.5, 3).unwrap();
        assert_eq!(a.len() + b.len(), 4);
        let mut all: Vec<f64> = a.contexts().iter().chain(b.contexts()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn subsample_is_deterministic() {
        let d = toy();
        assert_eq!(d.subsample(2, 11), d.subsample(2, 11));
        assert_eq!(d.subsample(2, 11).len(), 2);
        assert_eq!(d.subsample(10, 11), d);
    }
}
