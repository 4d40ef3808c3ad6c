//! IPS, SNIPS and DR estimators built from per-sample terms.

use crate::data::LoggedDataset;
use crate::error::{invalid, Error, Result};
use crate::model::RewardModel;
use crate::policy::{Policy, PolicyTable};

/// Per-sample estimator terms vᵢ with their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTerms {
    terms: Vec<f64>,
    mean: f64,
}

impl EstimateTerms {
    pub fn new(terms: Vec<f64>) -> Result<Self> {
        if terms.is_empty() {
            return invalid("estimate needs at least one term");
        }
        let n = terms.len() as f64;
        let rough = terms.iter().sum::<f64>() / n;
        // One correction pass; exact for constant terms.
        let mean = rough + terms.iter().map(|v| v - rough).sum::<f64>() / n;
        Ok(Self { terms, mean })
    }

    pub fn terms(&self) -> &[f64] {
        &self.terms
    }

    pub fn n(&self) -> usize {
        self.terms.len()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> Result<f64> {
        variance(self)
    }

    pub fn max_term(&self) -> f64 {
        self.terms.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Terms clipped to [lo, hi].
    pub fn clipped(&self, lo: f64, hi: f64) -> Self {
        Self::new(self.terms.iter().map(|v| v.clamp(lo, hi)).collect()).expect("non-empty")
    }
}

/// S² = (1/n) Σ (vᵢ − v̄)².
pub fn variance(terms: &EstimateTerms) -> Result<f64> {
    let n = terms.n();
    if n < 2 {
        return invalid(format!("variance needs at least 2 terms, got {n}"));
    }
    let m = terms.mean;
    Ok(terms.terms.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64)
}

fn check_propensities(data: &LoggedDataset) -> Result<()> {
    if let Some(i) = data.propensities().iter().position(|&p| !(p > 0.0)) {
        return invalid(format!("row {i}: zero logging propensity violates full support"));
    }
    Ok(())
}

fn logged_target_probs<P: Policy + ?Sized>(policy: &P, data: &LoggedDataset) -> Vec<f64> {
    data.iter().map(|s| policy.action_prob(s.context, s.action)).collect()
}

/// Importance weights π(aᵢ|xᵢ)/π₀(aᵢ|xᵢ) from target probabilities of the logged actions.
pub fn importance_weights(target_logged: &[f64], data: &LoggedDataset) -> Result<Vec<f64>> {
    check_propensities(data)?;
    if target_logged.len() != data.len() {
        return invalid("target probabilities do not match the dataset");
    }
    Ok(target_logged.iter().zip(data.propensities()).map(|(p, q)| p / q).collect())
}

/// IPS terms from the target policy's probabilities of the logged actions.
pub fn ips_from_logged(target_logged: &[f64], data: &LoggedDataset) -> Result<EstimateTerms> {
    let w = importance_weights(target_logged, data)?;
    EstimateTerms::new(w.iter().zip(data.rewards()).map(|(w, r)| w * r).collect())
}

/// vᵢ = π(aᵢ|xᵢ)/π₀(aᵢ|xᵢ) · rᵢ.
pub fn ips<P: Policy + ?Sized>(policy: &P, data: &LoggedDataset) -> Result<EstimateTerms> {
    ips_from_logged(&logged_target_probs(policy, data), data)
}

pub fn snips_from_logged(target_logged: &[f64], data: &LoggedDataset) -> Result<f64> {
    let w = importance_weights(target_logged, data)?;
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedEstimate("importance weights sum to zero".into()));
    }
    Ok(w.iter().zip(data.rewards()).map(|(w, r)| w * r).sum::<f64>() / total)
}

/// Σ wᵢ rᵢ / Σ wᵢ.
pub fn snips<P: Policy + ?Sized>(policy: &P, data: &LoggedDataset) -> Result<f64> {
    snips_from_logged(&logged_target_probs(policy, data), data)
}

/// DR terms from cached tables: `target` holds π(·|xᵢ) and `predictions`
/// holds μ̂(xᵢ, ·), both row-major over the dataset.
pub fn dr_from_tables(target: &PolicyTable, predictions: &[f64], data: &LoggedDataset) -> Result<EstimateTerms> {
    check_propensities(data)?;
    let k = target.n_actions();
    if target.len() != data.len() || predictions.len() != data.len() * k {
        return invalid("cached tables do not match the dataset");
    }
    let terms = (0..data.len())
        .map(|i| {
            let probs = target.row(i);
            let mu = &predictions[i * k..(i + 1) * k];
            let direct: f64 = probs.iter().zip(mu).map(|(p, m)| p * m).sum();
            let a = data.action(i);
            let w = probs[a] / data.propensity(i);
            direct + w * (data.reward(i) - mu[a])
        })
        .collect();
    EstimateTerms::new(terms)
}

/// Model predictions μ̂(xᵢ, ·) for every row, row-major.
pub fn prediction_table(model: &RewardModel, data: &LoggedDataset) -> Vec<f64> {
    let k = model.n_actions();
    let mut out = vec![0.0; data.len() * k];
    for (i, row) in out.chunks_exact_mut(k).enumerate() {
        model.predict_all(data.context(i), row);
    }
    out
}

/// vᵢ = μ̂(xᵢ, π) + wᵢ (rᵢ − μ̂(xᵢ, aᵢ)).
pub fn dr<P: Policy + ?Sized>(policy: &P, data: &LoggedDataset, model: &RewardModel) -> Result<EstimateTerms> {
    if model.d_x() != data.d_x() || model.n_actions() != data.n_actions() {
        return invalid("reward model does not match the dataset dimensions");
    }
    dr_from_tables(&PolicyTable::tabulate(policy, data), &prediction_table(model, data), data)
}
