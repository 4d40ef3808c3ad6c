use rayon::prelude::*;

use super::output::{fmt_float, CsvRow};
use super::{environment, mean_ci, ExperimentConfig, RunSeeds};
use crate::env::{argmax_lowest, sample_logged_data, softmax_logging_policy, TestPool};
use crate::error::Result;
use crate::hpo::{build_policy, sample_random, trial_model_seed, SearchSpace};
use crate::ope::{ips_from_logged, optimism_bound, regret_report, GridPoint};
use crate::policy::{Policy, PolicyTable, SoftmaxPolicy};
use crate::rng::{derive_seed, stream_rng, stream_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropCheck {
    /// mean V̂(θ̂) ≥ V(θ*), within 2 SE.
    SandwichUpper,
    /// V(θ*) ≥ mean V(θ̂), within 2 SE.
    SandwichLower,
    /// Largest |r_gen − (r_val + Δτ + C)| over runs and chosen points.
    RegretIdentity,
    /// Rate at which the clipped optimistic bias exceeds the optimism bound.
    OptimismCoverage,
}

impl PropCheck {
    pub fn as_str(self) -> &'static str {
        match self {
            PropCheck::SandwichUpper => "sandwich-upper",
            PropCheck::SandwichLower => "sandwich-lower",
            PropCheck::RegretIdentity => "regret-identity",
            PropCheck::OptimismCoverage => "optimism-coverage",
        }
    }
}

/// `value` is compared against `reference` with allowance `se`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropRow {
    pub beta0: f64,
    pub check: PropCheck,
    pub value: f64,
    pub reference: f64,
    pub se: f64,
    pub passed: bool,
}

impl CsvRow for PropRow {
    const HEADER: &'static [&'static str] = &["beta0", "check", "value", "reference", "se", "passed"];

    fn record(&self) -> Vec<String> {
        vec![
            fmt_float(self.beta0),
            self.check.as_str().into(),
            fmt_float(self.value),
            fmt_float(self.reference),
            fmt_float(self.se),
            self.passed.to_string(),
        ]
    }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let (m, ci) = mean_ci(v);
    (m, ci / 1.96)
}

/// E_x Σ_a μ(x,a) min(π(a|x), π₀(a|x)): the expectation of min(w·r, 1).
fn clipped_value(pool: &TestPool, policy: &dyn Policy, logging: &dyn Policy) -> f64 {
    let k = pool.n_actions();
    let (mut p, mut q) = (vec![0.0; k], vec![0.0; k]);
    let mut total = 0.0;
    for i in 0..pool.len() {
        policy.action_probs(pool.context(i), &mut p);
        logging.action_probs(pool.context(i), &mut q);
        total += pool.means(i).iter().zip(p.iter().zip(&q)).map(|(m, (a, b))| m * a.min(*b)).sum::<f64>();
    }
    total / pool.len() as f64
}

/// Finite-grid checks of the optimistic-bias sandwich, the regret identity
/// and the optimism bound. For each β₀ the environment, training data and a
/// grid of `grid_size` random points are fixed; validation sets vary over
/// `seeds` (sandwich, identity) and `reps` (coverage, with terms clipped to
/// [0, 1] and confidence `delta`).
pub fn run_prop_checks(cfg: &ExperimentConfig) -> Result<Vec<PropRow>> {
    cfg.validate()?;
    let pool_threads = cfg.thread_pool()?;
    let space = SearchSpace::default();
    let mut rows = Vec::new();
    for &beta0 in &cfg.beta0 {
        let seeds = RunSeeds::new(cfg.seed, 0, true);
        let env = environment(&seeds)?;
        let logging = softmax_logging_policy(env.clone(), beta0);
        let train = sample_logged_data(&env, &logging, cfg.n_train, seeds.train())?;
        let pool = TestPool::new(&env, cfg.n_test, seeds.pool())?;
        let mut rng = stream_rng(seeds.run, Stream::Sampler);
        let grid: Vec<SoftmaxPolicy> = (0..cfg.grid_size)
            .map(|t| build_policy(&sample_random(&space, &mut rng), &train, trial_model_seed(seeds.run, t + 1)))
            .collect::<Result<_>>()?;
        let v_true: Vec<f64> = grid.iter().map(|p| pool.value(p)).collect();
        let v_clip: Vec<f64> = grid.iter().map(|p| clipped_value(&pool, p, &logging)).collect();
        let v_star = v_true.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v_clip_star = v_clip.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        // Per validation set: (V̂(θ̂), V(θ̂), max identity residual, clipped bias).
        let evaluate = |stream: u64, j: usize| -> Result<(f64, f64, f64, f64)> {
            let val = sample_logged_data(&env, &logging, cfg.n_val, derive_seed(stream, j as u64))?;
            let p0 = val.propensities();
            let mut v_hat = Vec::with_capacity(grid.len());
            let mut clip_hat = Vec::with_capacity(grid.len());
            for policy in &grid {
                let logged = PolicyTable::tabulate(policy, &val).logged_probs(&val);
                let terms = ips_from_logged(&logged, &val)?;
                v_hat.push(terms.mean());
                let clipped = logged.iter().zip(p0).zip(val.rewards()).map(|((p, q), r)| (p / q * r).min(1.0));
                clip_hat.push(clipped.sum::<f64>() / val.len() as f64);
            }
            let chosen = argmax_lowest(&v_hat);
            let points: Vec<GridPoint> =
                v_true.iter().zip(&v_hat).map(|(&t, &h)| GridPoint { v_true: t, v_hat: h }).collect();
            let mut residual = 0.0_f64;
            for c in 0..points.len() {
                residual = residual.max(regret_report(&points, c)?.residual.abs());
            }
            let bias = clip_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v_clip_star;
            Ok((v_hat[chosen], v_true[chosen], residual, bias))
        };
        let sandwich_stream = stream_seed(seeds.run, Stream::ValData);
        let coverage_stream = stream_seed(seeds.run, Stream::Replication);
        let (sandwich, coverage) = pool_threads.install(|| -> Result<_> {
            let a: Vec<_> =
                (0..cfg.seeds).into_par_iter().map(|j| evaluate(sandwich_stream, j)).collect::<Result<_>>()?;
            let b: Vec<_> =
                (0..cfg.reps).into_par_iter().map(|j| evaluate(coverage_stream, j)).collect::<Result<_>>()?;
            Ok((a, b))
        })?;

        let (hat_mean, hat_se) = mean_se(&sandwich.iter().map(|s| s.0).collect::<Vec<_>>());
        let (gen_mean, gen_se) = mean_se(&sandwich.iter().map(|s| s.1).collect::<Vec<_>>());
        let residual = sandwich.iter().map(|s| s.2).fold(0.0, f64::max);
        let bound = optimism_bound(cfg.grid_size, cfg.n_val, cfg.delta)?;
        let rate = coverage.iter().filter(|s| s.3 > bound).count() as f64 / coverage.len() as f64;
        rows.extend([
            PropRow {
                beta0,
                check: PropCheck::SandwichUpper,
                value: hat_mean,
                reference: v_star,
                se: hat_se,
                passed: hat_mean >= v_star - 2.0 * hat_se,
            },
            PropRow {
                beta0,
                check: PropCheck::SandwichLower,
                value: v_star,
                reference: gen_mean,
                se: gen_se,
                passed: v_star >= gen_mean - 2.0 * gen_se,
            },
            PropRow {
                beta0,
                check: PropCheck::RegretIdentity,
                value: residual,
                reference: 1e-10,
                se: 0.0,
                passed: residual < 1e-10,
            },
            PropRow {
                beta0,
                check: PropCheck::OptimismCoverage,
                value: rate,
                reference: cfg.delta,
                se: 0.0,
                passed: rate <= cfg.delta,
            },
        ]);
    }
    Ok(rows)
}
