//! Quantities used to study HPO on top of an unbiased estimator: per-point
//! overestimation bias, the regret decomposition and the optimism bound.

use crate::env::argmax_lowest;
use crate::error::{invalid, Result};

/// τ(θ) = V̂(θ) − V(θ).
pub fn overestimation_bias(value_hat: f64, value_true: f64) -> f64 {
    value_hat - value_true
}

/// One evaluated hyperparameter point: true value and validation estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub v_true: f64,
    pub v_hat: f64,
}

impl GridPoint {
    pub fn tau(&self) -> f64 {
        overestimation_bias(self.v_hat, self.v_true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretReport {
    /// V(θ*) − V(θ̂).
    pub r_gen: f64,
    /// V̂(θ̂*) − V̂(θ̂).
    pub r_val: f64,
    /// τ(θ̂) − τ(θ*).
    pub delta_tau: f64,
    /// V̂(θ*) − V̂(θ̂*).
    pub c: f64,
    /// r_gen − (r_val + Δτ + C).
    pub residual: f64,
    pub theta_star: usize,
    pub theta_hat_star: usize,
    pub chosen: usize,
}

/// Regret decomposition for the point `chosen` of a finite grid. Argmax ties
/// go to the lowest index.
pub fn regret_report(grid: &[GridPoint], chosen: usize) -> Result<RegretReport> {
    if grid.is_empty() {
        return invalid("regret report needs a non-empty grid");
    }
    if chosen >= grid.len() {
        return invalid(format!("chosen index {chosen} outside grid of {}", grid.len()));
    }
    let v_true: Vec<f64> = grid.iter().map(|g| g.v_true).collect();
    let v_hat: Vec<f64> = grid.iter().map(|g| g.v_hat).collect();
    let star = argmax_lowest(&v_true);
    let hat_star = argmax_lowest(&v_hat);
    let (s, h, c) = (&grid[star], &grid[hat_star], &grid[chosen]);
    let r_gen = s.v_true - c.v_true;
    let r_val = h.v_hat - c.v_hat;
    let delta_tau = c.tau() - s.tau();
    let cc = s.v_hat - h.v_hat;
    Ok(RegretReport {
        r_gen,
        r_val,
        delta_tau,
        c: cc,
        residual: r_gen - (r_val + delta_tau + cc),
        theta_star: star,
        theta_hat_star: hat_star,
        chosen,
    })
}

/// √(ln(|Θ|/δ) / (2n)).
pub fn optimism_bound(theta_count: usize, n: usize, delta: f64) -> Result<f64> {
    if theta_count == 0 || n == 0 {
        return invalid("optimism bound needs |Θ| ≥ 1 and n ≥ 1");
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return invalid(format!("delta must lie in (0, 1], got {delta}"));
    }
    Ok(((theta_count as f64 / delta).ln() / (2.0 * n as f64)).sqrt())
}
