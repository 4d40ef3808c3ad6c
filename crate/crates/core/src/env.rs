//! Synthetic contextual-bandit environment.
//!
//! Contexts are standard normal in `d_x` dimensions and each action carries a
//! `d_e`-dimensional embedding. The expected reward is
//!
//! ```text
//! μ(x, a) = σ((xᵀ M e_a + η_xᵀ x + η_aᵀ e_a − shift) / scale)
//! ```
//!
//! where `shift`/`scale` standardize the raw logit over the context
//! distribution and a uniformly chosen action (the same convention as the
//! reference logistic reward generator). Hand-built environments default to
//! `shift = 0, scale = 1`.

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::data::LoggedDataset;
use crate::error::{invalid, Error, Result};
use crate::policy::{softmax_in_place, Policy};
use crate::rng::{rng_from_seed, stream_rng, Stream};

/// Default size of the Monte Carlo context pool used for ground-truth values.
pub const DEFAULT_TEST_CONTEXTS: usize = 100_000;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEnvironment {
    d_x: usize,
    d_e: usize,
    n_actions: usize,
    /// `d_x × d_e`, row-major.
    interaction: Vec<f64>,
    context_weights: Vec<f64>,
    action_weights: Vec<f64>,
    /// `n_actions × d_e`, row-major.
    embeddings: Vec<f64>,
    logit_shift: f64,
    logit_scale: f64,
    r_max: f64,
    seed: Option<u64>,
    // M e_a + η_x per action (n_actions × d_x) and η_aᵀ e_a.
    directions: Vec<f64>,
    offsets: Vec<f64>,
}

impl SyntheticEnvironment {
    /// Builds an environment from explicit parameters with no logit
    /// standardization.
    pub fn from_parameters(
        d_x: usize,
        d_e: usize,
        interaction: Vec<f64>,
        context_weights: Vec<f64>,
        action_weights: Vec<f64>,
        embeddings: Vec<f64>,
    ) -> Result<Self> {
        if d_x == 0 || d_e == 0 {
            return invalid("environment dimensions must be at least 1");
        }
        if interaction.len() != d_x * d_e
            || context_weights.len() != d_x
            || action_weights.len() != d_e
            || embeddings.is_empty()
            || !embeddings.len().is_multiple_of(d_e)
        {
            return invalid("environment parameter shapes are inconsistent");
        }
        let n_actions = embeddings.len() / d_e;
        let mut env = Self {
            d_x,
            d_e,
            n_actions,
            interaction,
            context_weights,
            action_weights,
            embeddings,
            logit_shift: 0.0,
            logit_scale: 1.0,
            r_max: 1.0,
            seed: None,
            directions: Vec::new(),
            offsets: Vec::new(),
        };
        env.precompute();
        Ok(env)
    }

    fn precompute(&mut self) {
        let (dx, de) = (self.d_x, self.d_e);
        self.directions = vec![0.0; self.n_actions * dx];
        self.offsets = vec![0.0; self.n_actions];
        for a in 0..self.n_actions {
            let e = &self.embeddings[a * de..(a + 1) * de];
            for i in 0..dx {
                let row = &self.interaction[i * de..(i + 1) * de];
                let me: f64 = row.iter().zip(e).map(|(m, v)| m * v).sum();
                self.directions[a * dx + i] = me + self.context_weights[i];
            }
            self.offsets[a] = self.action_weights.iter().zip(e).map(|(w, v)| w * v).sum();
        }
    }

    /// Sets shift/scale so the raw logit has mean 0 and variance 1 under
    /// x ~ N(0, I) and a ~ Uniform(actions). Closed form: for fixed `a` the
    /// logit is Gaussian with mean `offset_a` and variance `‖direction_a‖²`.
    fn standardize_logits(&mut self) {
        let k = self.n_actions as f64;
        let mean = self.offsets.iter().sum::<f64>() / k;
        let within: f64 =
            self.directions.chunks_exact(self.d_x).map(|d| d.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / k;
        let between = self.offsets.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / k;
        let var = within + between;
        self.logit_shift = mean;
        self.logit_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }
    pub fn d_e(&self) -> usize {
        self.d_e
    }
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
    pub fn interaction(&self) -> &[f64] {
        &self.interaction
    }
    pub fn context_weights(&self) -> &[f64] {
        &self.context_weights
    }
    pub fn action_weights(&self) -> &[f64] {
        &self.action_weights
    }
    pub fn embeddings(&self) -> &[f64] {
        &self.embeddings
    }
    pub fn logit_shift(&self) -> f64 {
        self.logit_shift
    }
    pub fn logit_scale(&self) -> f64 {
        self.logit_scale
    }

    fn logit(&self, x: &[f64], a: usize) -> f64 {
        let d = &self.directions[a * self.d_x..(a + 1) * self.d_x];
        let raw: f64 = x.iter().zip(d).map(|(u, v)| u * v).sum::<f64>() + self.offsets[a];
        (raw - self.logit_shift) / self.logit_scale
    }

    /// μ(x, a) with input validation.
    pub fn reward_mean(&self, x: &[f64], a: usize) -> Result<f64> {
        if x.len() != self.d_x {
            return invalid(format!("context has {} dims, expected {}", x.len(), self.d_x));
        }
        if a >= self.n_actions {
            return invalid(format!("action {a} out of range ({} actions)", self.n_actions));
        }
        Ok(sigmoid(self.logit(x, a)))
    }

    /// μ(x, ·) for every action. `x` must have `d_x` entries.
    pub fn reward_means(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.d_x);
        for (a, o) in out.iter_mut().enumerate() {
            *o = sigmoid(self.logit(x, a));
        }
    }
}

/// Draws every parameter i.i.d. Uniform[-1, 1] from `seed`.
pub fn sample_environment(seed: u64, d_x: usize, d_e: usize, n_actions: usize) -> Result<SyntheticEnvironment> {
    if d_x == 0 || d_e == 0 || n_actions == 0 {
        return invalid("environment dimensions must be at least 1");
    }
    let mut rng = rng_from_seed(seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect() };
    let interaction = draw(d_x * d_e);
    let context_weights = draw(d_x);
    let action_weights = draw(d_e);
    let embeddings = draw(n_actions * d_e);
    let mut env =
        SyntheticEnvironment::from_parameters(d_x, d_e, interaction, context_weights, action_weights, embeddings)?;
    env.seed = Some(seed);
    env.standardize_logits();
    Ok(env)
}

pub fn reward_mean(env: &SyntheticEnvironment, x: &[f64], a: usize) -> Result<f64> {
    env.reward_mean(x, a)
}

/// π₀(a|x) ∝ exp(β₀·μ(x,a)) on the true reward function.
#[derive(Debug, Clone)]
pub struct LoggingPolicy {
    env: Arc<SyntheticEnvironment>,
    beta0: f64,
}

impl LoggingPolicy {
    pub fn beta0(&self) -> f64 {
        self.beta0
    }
    pub fn environment(&self) -> &SyntheticEnvironment {
        &self.env
    }
}

impl Policy for LoggingPolicy {
    fn n_actions(&self) -> usize {
        self.env.n_actions
    }
    fn action_probs(&self, context: &[f64], out: &mut [f64]) {
        self.env.reward_means(context, out);
        softmax_in_place(out, self.beta0);
    }
}

pub fn softmax_logging_policy(env: Arc<SyntheticEnvironment>, beta0: f64) -> LoggingPolicy {
    LoggingPolicy { env, beta0 }
}

/// Deterministic argmax of the true μ, ties broken by the lowest action id.
#[derive(Debug, Clone)]
pub struct OptimalPolicy {
    env: Arc<SyntheticEnvironment>,
}

impl OptimalPolicy {
    pub fn new(env: Arc<SyntheticEnvironment>) -> Self {
        Self { env }
    }
}

pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl Policy for OptimalPolicy {
    fn n_actions(&self) -> usize {
        self.env.n_actions
    }
    fn action_probs(&self, context: &[f64], out: &mut [f64]) {
        self.env.reward_means(context, out);
        let best = argmax_lowest(out);
        out.fill(0.0);
        out[best] = 1.0;
    }
}

fn standard_normal_contexts(n: usize, d_x: usize, rng: &mut crate::rng::Rng) -> Vec<f64> {
    (0..n * d_x).map(|_| StandardNormal.sample(rng)).collect()
}

/// Draws `n` rows: x ~ N(0, I), a ~ policy(·|x), r ~ Bernoulli(μ(x, a)).
pub fn sample_logged_data<P: Policy + ?Sized>(
    env: &SyntheticEnvironment,
    policy: &P,
    n: usize,
    seed: u64,
) -> Result<LoggedDataset> {
    if n == 0 {
        return invalid("cannot sample an empty dataset");
    }
    let k = env.n_actions;
    if policy.n_actions() != k {
        return invalid("policy and environment disagree on the number of actions");
    }
    let mut rng = rng_from_seed(seed);
    let contexts = standard_normal_contexts(n, env.d_x, &mut rng);
    let mut actions = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    let mut propensities = Vec::with_capacity(n);
    let mut probs = vec![0.0; k];
    for i in 0..n {
        let x = &contexts[i * env.d_x..(i + 1) * env.d_x];
        policy.action_probs(x, &mut probs);
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidPolicy { row: i });
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut a = k - 1;
        for (j, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc && p > 0.0 {
                a = j;
                break;
            }
        }
        while probs[a] <= 0.0 {
            a -= 1;
        }
        let mu = sigmoid(env.logit(x, a));
        let r = if rng.random::<f64>() < mu { 1.0 } else { 0.0 };
        actions.push(a);
        rewards.push(r);
        propensities.push(probs[a]);
    }
    LoggedDataset::new(env.d_x, k, env.r_max, contexts, actions, rewards, propensities)
}

/// Fixed pool of test contexts with μ(x, ·) precomputed: ground-truth values
/// are exact over actions and rewards, Monte Carlo over contexts.
#[derive(Debug, Clone)]
pub struct TestPool {
    d_x: usize,
    n_actions: usize,
    contexts: Vec<f64>,
    means: Vec<f64>,
}

impl TestPool {
    pub fn new(env: &SyntheticEnvironment, n_test: usize, seed: u64) -> Result<Self> {
        if n_test == 0 {
            return invalid("test pool needs at least one context");
        }
        let mut rng = stream_rng(seed, Stream::TestPool);
        let contexts = standard_normal_contexts(n_test, env.d_x, &mut rng);
        let k = env.n_actions;
        let mut means = vec![0.0; n_test * k];
        for (i, row) in means.chunks_exact_mut(k).enumerate() {
            env.reward_means(&contexts[i * env.d_x..(i + 1) * env.d_x], row);
        }
        Ok(Self { d_x: env.d_x, n_actions: k, contexts, means })
    }

    pub fn len(&self) -> usize {
        self.means.len() / self.n_actions
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn context(&self, i: usize) -> &[f64] {
        &self.contexts[i * self.d_x..(i + 1) * self.d_x]
    }

    pub fn means(&self, i: usize) -> &[f64] {
        &self.means[i * self.n_actions..(i + 1) * self.n_actions]
    }

    /// (1/n) Σᵢ Σₐ π(a|xᵢ) μ(xᵢ, a).
    pub fn value<P: Policy + ?Sized>(&self, policy: &P) -> f64 {
        let mut probs = vec![0.0; self.n_actions];
        let mut total = 0.0;
        for i in 0..self.len() {
            policy.action_probs(self.context(i), &mut probs);
            total += probs.iter().zip(self.means(i)).map(|(p, m)| p * m).sum::<f64>();
        }
        total / self.len() as f64
    }

    /// Value of the per-context argmax of μ.
    pub fn optimal_value(&self) -> f64 {
        let total: f64 = (0..self.len())
            .map(|i| {
                let m = self.means(i);
                m[argmax_lowest(m)]
            })
            .sum();
        total / self.len() as f64
    }

    /// Value of a reward-model-driven policy whose per-context probabilities
    /// come from `probs_for` (used when the caller already has a fast batch
    /// path, e.g. a fitted model).
    pub fn value_with(&self, mut probs_for: impl FnMut(&[f64], &mut [f64])) -> f64 {
        let mut probs = vec![0.0; self.n_actions];
        let mut total = 0.0;
        for i in 0..self.len() {
            probs_for(self.context(i), &mut probs);
            total += probs.iter().zip(self.means(i)).map(|(p, m)| p * m).sum::<f64>();
        }
        total / self.len() as f64
    }
}

pub fn true_value<P: Policy + ?Sized>(env: &SyntheticEnvironment, policy: &P, n_test: usize, seed: u64) -> Result<f64> {
    Ok(TestPool::new(env, n_test, seed)?.value(policy))
}

pub fn optimal_value(env: &SyntheticEnvironment, n_test: usize, seed: u64) -> Result<f64> {
    Ok(TestPool::new(env, n_test, seed)?.optimal_value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::uniform_policy;

    fn env_1d(x_coef: f64) -> SyntheticEnvironment {
        SyntheticEnvironment::from_parameters(1, 1, vec![1.0], vec![x_coef], vec![0.0], vec![1.0, -1.0]).unwrap()
    }

    #[test]
    fn sampled_parameters_in_range_and_deterministic() {
        let env = sample_environment(0, 10, 10, 10).unwrap();
        for v in
            env.interaction().iter().chain(env.context_weights()).chain(env.action_weights()).chain(env.embeddings())
        {
            assert!((-1.0..=1.0).contains(v));
        }
        assert_eq!(env, sample_environment(0, 10, 10, 10).unwrap());
        assert_ne!(env, sample_environment(1, 10, 10, 10).unwrap());
    }

    #[test]
    fn shapes_follow_dimensions() {
        let env = sample_environment(0, 1, 1, 2).unwrap();
        assert_eq!(env.interaction().len(), 1);
        assert_eq!(env.embeddings().len(), 2);
        assert_eq!(env.n_actions(), 2);
        assert!(sample_environment(0, 0, 1, 1).is_err());
    }

    #[test]
    fn reward_mean_hand_values() {
        let zero = SyntheticEnvironment::from_parameters(1, 1, vec![0.0], vec![0.0], vec![0.0], vec![1.0]).unwrap();
        assert_eq!(zero.reward_mean(&[0.0], 0).unwrap(), 0.5);
        let env = env_1d(0.0);
        assert!((env.reward_mean(&[2.0], 0).unwrap() - 0.8807970780).abs() < 1e-10);
        assert!((sigmoid(1.0) - 0.7310585786).abs() < 1e-10);
        assert!(env.reward_mean(&[1.0, 2.0], 0).is_err());
        assert!(env.reward_mean(&[1.0], 2).is_err());
    }

    #[test]
    fn standardized_environment_logits_have_unit_scale() {
        let env = sample_environment(5, 10, 10, 10).unwrap();
        let pool = TestPool::new(&env, 20_000, 1).unwrap();
        let mut logits = Vec::new();
        for i in 0..pool.len() {
            for a in 0..10 {
                logits.push(env.logit(pool.context(i), a));
            }
        }
        let n = logits.len() as f64;
        let mean = logits.iter().sum::<f64>() / n;
        let var = logits.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.05, "{mean}");
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn logging_policy_limits() {
        let env = Arc::new(sample_environment(3, 10, 10, 10).unwrap());
        let x = vec![0.3; 10];
        let mut p = vec![0.0; 10];
        softmax_logging_policy(env.clone(), 0.0).action_probs(&x, &mut p);
        assert!(p.iter().all(|&v| (v - 0.1).abs() < 1e-15));
        softmax_logging_policy(env.clone(), 1e6).action_probs(&x, &mut p);
        let mut mu = vec![0.0; 10];
        env.reward_means(&x, &mut mu);
        assert!(p[argmax_lowest(&mu)] > 0.999);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_action_logging_closed_form() {
        // μ = (σ(z0), σ(z1)) chosen to equal (0.8, 0.3) through the logit.
        let logit = |p: f64| (p / (1.0 - p)).ln();
        let env =
            SyntheticEnvironment::from_parameters(1, 1, vec![0.0], vec![0.0], vec![1.0], vec![logit(0.8), logit(0.3)])
                .unwrap();
        let mut p = vec![0.0; 2];
        softmax_logging_policy(Arc::new(env), 1.0).action_probs(&[0.0], &mut p);
        assert!((p[0] - 0.6224593).abs() < 1e-7);
        assert!((p[1] - 0.3775407).abs() < 1e-7);
    }

    #[test]
    fn uniform_logging_propensities() {
        let env = sample_environment(1, 10, 10, 10).unwrap();
        let data = sample_logged_data(&env, &uniform_policy(10).unwrap(), 1000, 4).unwrap();
        assert_eq!(data.len(), 1000);
        assert!(data.propensities().iter().all(|&p| p == 0.1));
        assert_eq!(data, sample_logged_data(&env, &uniform_policy(10).unwrap(), 1000, 4).unwrap());
    }

    #[test]
    fn zero_mass_policy_is_rejected() {
        struct Dead;
        impl Policy for Dead {
            fn n_actions(&self) -> usize {
                2
            }
            fn action_probs(&self, _: &[f64], out: &mut [f64]) {
                out.fill(0.0);
            }
        }
        let env = env_1d(0.0);
        assert!(matches!(sample_logged_data(&env, &Dead, 3, 0), Err(Error::InvalidPolicy { row: 0 })));
    }

    #[test]
    fn propensities_match_recomputed_probabilities() {
        let env = Arc::new(sample_environment(2, 10, 10, 10).unwrap());
        let pi0 = softmax_logging_policy(env.clone(), 3.0);
        let data = sample_logged_data(&env, &pi0, 500, 9).unwrap();
        for s in data.iter() {
            assert_eq!(s.propensity, pi0.action_prob(s.context, s.action));
        }
    }

    #[test]
    fn single_action_value_is_mean_reward() {
        let env =
            SyntheticEnvironment::from_parameters(2, 1, vec![0.5, -0.5], vec![0.1, 0.2], vec![0.3], vec![0.7]).unwrap();
        let pool = TestPool::new(&env, 1000, 0).unwrap();
        let direct = (0..pool.len()).map(|i| pool.means(i)[0]).sum::<f64>() / 1000.0;
        let v = pool.value(&uniform_policy(1).unwrap());
        assert!((v - direct).abs() < 1e-12);
    }

    #[test]
    fn uniform_value_is_average_mu() {
        let env = sample_environment(8, 10, 10, 10).unwrap();
        let pool = TestPool::new(&env, 2000, 3).unwrap();
        let direct = (0..pool.len()).map(|i| pool.means(i).iter().sum::<f64>() / 10.0).sum::<f64>() / 2000.0;
        assert!((pool.value(&uniform_policy(10).unwrap()) - direct).abs() < 1e-12);
    }

    #[test]
    fn optimal_dominates_and_matches_argmax_policy() {
        let env = Arc::new(sample_environment(4, 10, 10, 10).unwrap());
        let pool = TestPool::new(&env, 5000, 2).unwrap();
        let best = pool.optimal_value();
        for beta0 in [-3.0, 0.0, 3.0, 20.0] {
            assert!(pool.value(&softmax_logging_policy(env.clone(), beta0)) <= best);
        }
        assert_eq!(pool.value(&OptimalPolicy::new(env.clone())), best);
    }

    #[test]
    fn logging_value_monotone_in_beta0() {
        let env = Arc::new(sample_environment(6, 10, 10, 10).unwrap());
        let pool = TestPool::new(&env, 3000, 6).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for beta0 in [0.0, 0.5, 1.0, 3.0, 10.0, 20.0, 50.0] {
            let v = pool.value(&softmax_logging_policy(env.clone(), beta0));
            assert!(v >= prev - 1e-9, "beta0 {beta0}: {v} < {prev}");
            prev = v;
        }
    }
}
