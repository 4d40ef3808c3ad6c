//! Conditional hyperparameter search space: inverse temperature β, the
//! reward-model family and that family's own hyperparameters.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{LrHyperparams, ModelFamily, RfHyperparams};
use crate::rng::Rng;

/// One point θ of the search space; exactly one model block is active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperparamPoint {
    pub beta: f64,
    pub model: ModelBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ModelBlock {
    #[serde(rename = "LR")]
    Logistic(LrHyperparams),
    #[serde(rename = "RF")]
    Forest(RfHyperparams),
}

impl HyperparamPoint {
    pub fn family(&self) -> ModelFamily {
        match self.model {
            ModelBlock::Logistic(_) => ModelFamily::LogisticRegression,
            ModelBlock::Forest(_) => ModelFamily::RandomForest,
        }
    }

    pub fn logistic(&self) -> Option<&LrHyperparams> {
        match &self.model {
            ModelBlock::Logistic(hp) => Some(hp),
            ModelBlock::Forest(_) => None,
        }
    }

    pub fn forest(&self) -> Option<&RfHyperparams> {
        match &self.model {
            ModelBlock::Forest(hp) => Some(hp),
            ModelBlock::Logistic(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub beta: (f64, f64),
    pub c: (f64, f64),
    pub l1_ratios: Vec<f64>,
    pub max_depth: (usize, usize),
    pub min_samples_split: (usize, usize),
    pub max_samples: Vec<f64>,
}

fn tenths() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            beta: (0.01, 100.0),
            c: (1e-3, 1e3),
            l1_ratios: tenths(),
            max_depth: (2, 32),
            min_samples_split: (2, 32),
            max_samples: tenths(),
        }
    }
}

/// A coordinate of the search space, in the representation the samplers use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Model,
    Beta,
    C,
    L1Ratio,
    MaxDepth,
    MinSamplesSplit,
    MaxSamples,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Continuous on [lo, hi] after the optional log10 transform.
    Continuous {
        lo: f64,
        hi: f64,
    },
    Integer {
        lo: f64,
        hi: f64,
    },
    Categorical {
        n: usize,
    },
}

impl Dimension {
    pub const SHARED: [Dimension; 2] = [Dimension::Model, Dimension::Beta];

    pub fn block(family: ModelFamily) -> &'static [Dimension] {
        match family {
            ModelFamily::LogisticRegression => &[Dimension::C, Dimension::L1Ratio],
            ModelFamily::RandomForest => &[Dimension::MaxDepth, Dimension::MinSamplesSplit, Dimension::MaxSamples],
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let (b0, b1) = self.beta;
        let (c0, c1) = self.c;
        if !(b0 > 0.0 && b1 > b0) || !(c0 > 0.0 && c1 > c0) {
            return invalid("log-scaled ranges need 0 < lo < hi");
        }
        if self.l1_ratios.is_empty() || self.max_samples.is_empty() {
            return invalid("categorical choices must be non-empty");
        }
        if self.max_depth.0 == 0 || self.max_depth.1 < self.max_depth.0 {
            return invalid("invalid max_depth range");
        }
        if self.min_samples_split.0 < 2 || self.min_samples_split.1 < self.min_samples_split.0 {
            return invalid("invalid min_samples_split range");
        }
        Ok(())
    }

    pub fn domain(&self, dim: Dimension) -> Domain {
        match dim {
            Dimension::Model => Domain::Categorical { n: 2 },
            Dimension::Beta => Domain::Continuous { lo: self.beta.0.log10(), hi: self.beta.1.log10() },
            Dimension::C => Domain::Continuous { lo: self.c.0.log10(), hi: self.c.1.log10() },
            Dimension::L1Ratio => Domain::Categorical { n: self.l1_ratios.len() },
            Dimension::MaxDepth => Domain::Integer { lo: self.max_depth.0 as f64, hi: self.max_depth.1 as f64 },
            Dimension::MinSamplesSplit => {
                Domain::Integer { lo: self.min_samples_split.0 as f64, hi: self.min_samples_split.1 as f64 }
            }
            Dimension::MaxSamples => Domain::Categorical { n: self.max_samples.len() },
        }
    }

    /// Coordinate of `point` in sampler space (log10 for β and C, category
    /// index for categoricals), or `None` when the dimension is inactive.
    pub fn encode(&self, point: &HyperparamPoint, dim: Dimension) -> Option<f64> {
        let index_of = |choices: &[f64], v: f64| {
            choices.iter().enumerate().min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs())).map(|(i, _)| i as f64)
        };
        match (dim, &point.model) {
            (Dimension::Model, _) => Some(match point.family() {
                ModelFamily::LogisticRegression => 0.0,
                ModelFamily::RandomForest => 1.0,
            }),
            (Dimension::Beta, _) => Some(point.beta.log10()),
            (Dimension::C, ModelBlock::Logistic(hp)) => Some(hp.c.log10()),
            (Dimension::L1Ratio, ModelBlock::Logistic(hp)) => index_of(&self.l1_ratios, hp.l1_ratio),
            (Dimension::MaxDepth, ModelBlock::Forest(hp)) => Some(hp.max_depth as f64),
            (Dimension::MinSamplesSplit, ModelBlock::Forest(hp)) => Some(hp.min_samples_split as f64),
            (Dimension::MaxSamples, ModelBlock::Forest(hp)) => index_of(&self.max_samples, hp.max_samples),
            _ => None,
        }
    }

    /// Builds a point from sampler-space coordinates, looked up by `value`.
    pub fn decode(&self, family: ModelFamily, value: impl Fn(Dimension) -> f64) -> HyperparamPoint {
        let beta = 10f64.powf(value(Dimension::Beta)).clamp(self.beta.0, self.beta.1);
        let pick = |choices: &[f64], v: f64| choices[(v.round().max(0.0) as usize).min(choices.len() - 1)];
        let int = |(lo, hi): (usize, usize), v: f64| (v.round().max(lo as f64) as usize).min(hi);
        let model = match family {
            ModelFamily::LogisticRegression => ModelBlock::Logistic(LrHyperparams {
                c: 10f64.powf(value(Dimension::C)).clamp(self.c.0, self.c.1),
                l1_ratio: pick(&self.l1_ratios, value(Dimension::L1Ratio)),
            }),
            ModelFamily::RandomForest => ModelBlock::Forest(RfHyperparams::new(
                int(self.max_depth, value(Dimension::MaxDepth)),
                int(self.min_samples_split, value(Dimension::MinSamplesSplit)),
                pick(&self.max_samples, value(Dimension::MaxSamples)),
            )),
        };
        HyperparamPoint { beta, model }
    }

    pub fn contains(&self, point: &HyperparamPoint) -> bool {
        let in_range = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        if !in_range(point.beta, self.beta) {
            return false;
        }
        match &point.model {
            ModelBlock::Logistic(hp) => in_range(hp.c, self.c) && self.l1_ratios.contains(&hp.l1_ratio),
            ModelBlock::Forest(hp) => {
                (self.max_depth.0..=self.max_depth.1).contains(&hp.max_depth)
                    && (self.min_samples_split.0..=self.min_samples_split.1).contains(&hp.min_samples_split)
                    && self.max_samples.contains(&hp.max_samples)
            }
        }
    }
}

/// Uniform draw in sampler space for one dimension.
pub(crate) fn uniform_coordinate(domain: Domain, rng: &mut Rng) -> f64 {
    match domain {
        Domain::Continuous { lo, hi } => rng.random_range(lo..=hi),
        Domain::Integer { lo, hi } => rng.random_range(lo as i64..=hi as i64) as f64,
        Domain::Categorical { n } => rng.random_range(0..n) as f64,
    }
}

/// Random search: β and C log-uniform, integers and categoricals uniform;
/// only the drawn family's block is sampled.
pub fn sample_random(space: &SearchSpace, rng: &mut Rng) -> HyperparamPoint {
    let family = ModelFamily::ALL[uniform_coordinate(space.domain(Dimension::Model), rng) as usize];
    let beta = uniform_coordinate(space.domain(Dimension::Beta), rng);
    let block: Vec<(Dimension, f64)> =
        Dimension::block(family).iter().map(|&d| (d, uniform_coordinate(space.domain(d), rng))).collect();
    space.decode(family, |d| {
        if d == Dimension::Beta {
            beta
        } else {
            block.iter().find(|(x, _)| *x == d).map_or(0.0, |(_, v)| *v)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn random_points_stay_in_range() {
        let space = SearchSpace::default();
        let mut rng = rng_from_seed(0);
        let mut families = [0usize; 2];
        for _ in 0..10_000 {
            let p = sample_random(&space, &mut rng);
            assert!(space.contains(&p), "{p:?}");
            families[p.family() as usize] += 1;
            match p.family() {
                ModelFamily::LogisticRegression => assert!(p.forest().is_none()),
                ModelFamily::RandomForest => assert!(p.logistic().is_none()),
            }
        }
        assert!(families.iter().all(|&c| c > 4500));
    }

    #[test]
    fn log_beta_is_uniform() {
        // χ² over 10 equal bins of log10 β; the 0.99 quantile of χ²(9) is 21.67.
        let space = SearchSpace::default();
        let mut rng = rng_from_seed(1);
        let mut bins = [0usize; 10];
        let n = 10_000;
        for _ in 0..n {
            let u = (sample_random(&space, &mut rng).beta.log10() + 2.0) / 4.0;
            bins[((u * 10.0) as usize).min(9)] += 1;
        }
        let expected = n as f64 / 10.0;
        let chi2: f64 = bins.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 21.67, "chi2 = {chi2}");
    }

    #[test]
    fn random_sequence_is_reproducible() {
        let space = SearchSpace::default();
        let a: Vec<_> = {
            let mut r = rng_from_seed(5);
            (0..20).map(|_| sample_random(&space, &mut r)).collect()
        };
        let b: Vec<_> = {
            let mut r = rng_from_seed(5);
            (0..20).map(|_| sample_random(&space, &mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn encode_decode_round_trip() {
        let space = SearchSpace::default();
        let mut rng = rng_from_seed(2);
        for _ in 0..200 {
            let p = sample_random(&space, &mut rng);
            let q = space.decode(p.family(), |d| space.encode(&p, d).unwrap_or(0.0));
            assert_eq!(p.family(), q.family());
            assert!((p.beta - q.beta).abs() < 1e-9 * p.beta);
            match (p.model, q.model) {
                (ModelBlock::Logistic(a), ModelBlock::Logistic(b)) => {
                    assert!((a.c - b.c).abs() < 1e-9 * a.c);
                    assert_eq!(a.l1_ratio, b.l1_ratio);
                }
                (ModelBlock::Forest(a), ModelBlock::Forest(b)) => assert_eq!(a, b),
                _ => unreachable!(),
            }
        }
    }
}
