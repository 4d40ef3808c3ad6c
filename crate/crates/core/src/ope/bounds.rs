//! High-probability lower bounds on a policy value and the paired t-test used
//! to compare two policies on the same logged data.

use serde::{Deserialize, Serialize};

use super::estimators::{importance_weights, EstimateTerms};
use super::tdist::t_quantile;
use crate::data::LoggedDataset;
use crate::error::{invalid, Result};
use crate::policy::Policy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMethod {
    #[serde(rename = "ttest")]
    TTest,
    Hoeffding,
    Bernstein,
}

impl BoundMethod {
    pub const ALL: [BoundMethod; 3] = [BoundMethod::TTest, BoundMethod::Bernstein, BoundMethod::Hoeffding];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundMethod::TTest => "ttest",
            BoundMethod::Hoeffding => "hoeffding",
            BoundMethod::Bernstein => "bernstein",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub estimate: f64,
    pub penalty: f64,
    pub lower_bound: f64,
    pub method: BoundMethod,
    pub delta: f64,
    pub n: usize,
    pub w_max: Option<f64>,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    Ok(())
}

fn check_w_max(w_max: f64) -> Result<()> {
    if !(w_max > 0.0) || !w_max.is_finite() {
        return invalid(format!("w_max must be positive and finite, got {w_max}"));
    }
    Ok(())
}

fn result(terms: &EstimateTerms, penalty: f64, method: BoundMethod, delta: f64, w_max: Option<f64>) -> BoundResult {
    BoundResult {
        estimate: terms.mean(),
        penalty,
        lower_bound: terms.mean() - penalty,
        method,
        delta,
        n: terms.n(),
        w_max,
    }
}

/// Penalty t_{1−δ, n−1} · √(S² / (n−1)).
pub fn lower_bound_ttest(terms: &EstimateTerms, delta: f64) -> Result<BoundResult> {
    check_delta(delta)?;
    let s2 = terms.variance()?;
    let n = terms.n() as f64;
    let penalty = t_quantile(1.0 - delta, n - 1.0) * (s2 / (n - 1.0)).sqrt();
    Ok(result(terms, penalty, BoundMethod::TTest, delta, None))
}

/// Penalty w_max · √(2 ln(2/δ) / n).
pub fn lower_bound_hoeffding(terms: &EstimateTerms, delta: f64, w_max: f64) -> Result<BoundResult> {
    check_delta(delta)?;
    check_w_max(w_max)?;
    let n = terms.n() as f64;
    let penalty = w_max * (2.0 * (2.0 / delta).ln() / n).sqrt();
    Ok(result(terms, penalty, BoundMethod::Hoeffding, delta, Some(w_max)))
}

/// Penalty √(2 ln(2/δ) S² / (n−1)) + 7 w_max ln(2/δ) / (3(n−1)).
pub fn lower_bound_bernstein(terms: &EstimateTerms, delta: f64, w_max: f64) -> Result<BoundResult> {
    check_delta(delta)?;
    check_w_max(w_max)?;
    let s2 = terms.variance()?;
    let n = terms.n() as f64;
    let log_term = (2.0 / delta).ln();
    let penalty = (2.0 * log_term * s2 / (n - 1.0)).sqrt() + 7.0 * w_max * log_term / (3.0 * (n - 1.0));
    Ok(result(terms, penalty, BoundMethod::Bernstein, delta, Some(w_max)))
}

pub fn lower_bound(terms: &EstimateTerms, method: BoundMethod, delta: f64, w_max: f64) -> Result<BoundResult> {
    match method {
        BoundMethod::TTest => lower_bound_ttest(terms, delta),
        BoundMethod::Hoeffding => lower_bound_hoeffding(terms, delta, w_max),
        BoundMethod::Bernstein => lower_bound_bernstein(terms, delta, w_max),
    }
}

/// max over dataset contexts and all actions of π(a|x)/π₀(a|x), for a
/// logging policy known at every action (synthetic data). This enumerates
/// only observed contexts, so it never exceeds the true supremum.
pub fn empirical_w_max<P, Q>(policy: &P, logging: &Q, data: &LoggedDataset) -> Result<f64>
where
    P: Policy + ?Sized,
    Q: Policy + ?Sized,
{
    if data.is_empty() {
        return invalid("w_max needs a non-empty dataset");
    }
    let k = policy.n_actions();
    let (mut p, mut q) = (vec![0.0; k], vec![0.0; k]);
    let mut best = 0.0_f64;
    for i in 0..data.len() {
        let x = data.context(i);
        policy.action_probs(x, &mut p);
        logging.action_probs(x, &mut q);
        for a in 0..k {
            if q[a] <= 0.0 {
                if p[a] > 0.0 {
                    return invalid(format!("row {i}: logging policy gives action {a} zero probability"));
                }
                continue;
            }
            best = best.max(p[a] / q[a]);
        }
    }
    Ok(best)
}

/// max over logged pairs of π(aᵢ|xᵢ)/π₀(aᵢ|xᵢ) using recorded propensities.
pub fn empirical_w_max_logged<P: Policy + ?Sized>(policy: &P, data: &LoggedDataset) -> Result<f64> {
    if data.is_empty() {
        return invalid("w_max needs a non-empty dataset");
    }
    let target: Vec<f64> = data.iter().map(|s| policy.action_prob(s.context, s.action)).collect();
    Ok(importance_weights(&target, data)?.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedT {
    /// |mean Δ| / √(S²(Δ)/(n−1)); `+∞` when Δ is constant and non-zero.
    pub statistic: f64,
    /// Signed mean of Δᵢ = (π₁(aᵢ|xᵢ) − π₂(aᵢ|xᵢ)) / π₀(aᵢ|xᵢ) · rᵢ.
    pub mean_delta: f64,
}

/// Paired t statistic from the two policies' probabilities of the logged actions.
pub fn paired_t_from_logged(pi1_logged: &[f64], pi2_logged: &[f64], data: &LoggedDataset) -> Result<PairedT> {
    if data.len() < 2 {
        return invalid("paired t statistic needs at least 2 rows");
    }
    if pi1_logged.len() != data.len() || pi2_logged.len() != data.len() {
        return invalid("policy probabilities do not match the dataset");
    }
    let diff: Vec<f64> = pi1_logged.iter().zip(pi2_logged).map(|(a, b)| a - b).collect();
    let w = importance_weights(&diff, data)?;
    let terms = EstimateTerms::new(w.iter().zip(data.rewards()).map(|(w, r)| w * r).collect())?;
    Ok(paired_t_from_terms(&terms))
}

pub fn paired_t_from_terms(delta_terms: &EstimateTerms) -> PairedT {
    let mean = delta_terms.mean();
    let n = delta_terms.n() as f64;
    let s2 = delta_terms.variance().unwrap_or(0.0);
    let statistic = if s2 > 0.0 {
        mean.abs() / (s2 / (n - 1.0)).sqrt()
    } else if mean != 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    PairedT { statistic, mean_delta: mean }
}

pub fn paired_t_statistic<P, Q>(pi1: &P, pi2: &Q, data: &LoggedDataset) -> Result<PairedT>
where
    P: Policy + ?Sized,
    Q: Policy + ?Sized,
{
    let p1: Vec<f64> = data.iter().map(|s| pi1.action_prob(s.context, s.action)).collect();
    let p2: Vec<f64> = data.iter().map(|s| pi2.action_prob(s.context, s.action)).collect();
    paired_t_from_logged(&p1, &p2, data)
}
