//! Tree-structured Parzen estimator over the conditional search space.
//!
//! The history is split into a good set (top quantile by objective) and a bad
//! set; per-dimension densities l and g are fitted on each and candidates
//! drawn from l are ranked by ln l − ln g.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::space::{sample_random, uniform_coordinate, Dimension, Domain, HyperparamPoint, SearchSpace};
use crate::model::ModelFamily;
use crate::rng::Rng;

/// What a sampler may see of a finished trial: the point and its objective.
/// Ground-truth values are deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub point: HyperparamPoint,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpeConfig {
    pub n_startup: usize,
    pub gamma: f64,
    pub n_candidates: usize,
}

impl Default for TpeConfig {
    fn default() -> Self {
        Self { n_startup: 10, gamma: 0.25, n_candidates: 24 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Random,
    Tpe,
}

impl SamplerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::Random => "random",
            SamplerKind::Tpe => "tpe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampler {
    Random,
    Tpe(TpeConfig),
}

impl Sampler {
    pub fn from_kind(kind: SamplerKind) -> Self {
        match kind {
            SamplerKind::Random => Sampler::Random,
            SamplerKind::Tpe => Sampler::Tpe(TpeConfig::default()),
        }
    }

    pub fn suggest(&self, history: &[Observation], space: &SearchSpace, rng: &mut Rng) -> HyperparamPoint {
        match self {
            Sampler::Random => sample_random(space, rng),
            Sampler::Tpe(cfg) => tpe_suggest(history, space, cfg, rng),
        }
    }
}

fn erfc(x: f64) -> f64 {
    // Chebyshev fit with fractional error below 1.2e-7 everywhere.
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398 + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Parzen estimator for one dimension.
#[derive(Debug, Clone)]
enum Density {
    Uniform { domain: Domain },
    Kernel { lo: f64, hi: f64, centers: Vec<f64>, bandwidth: f64, mass: Vec<f64>, integer: bool },
    Categorical { probs: Vec<f64> },
}

impl Density {
    fn fit(domain: Domain, values: &[f64]) -> Self {
        match domain {
            Domain::Categorical { n } => {
                let mut counts = vec![1.0; n];
                for &v in values {
                    counts[v as usize] += 1.0;
                }
                let total = (values.len() + n) as f64;
                Density::Categorical { probs: counts.into_iter().map(|c| c / total).collect() }
            }
            Domain::Continuous { lo, hi } | Domain::Integer { lo, hi } => {
                if values.len() < 2 || hi <= lo {
                    return Density::Uniform { domain };
                }
                let range = hi - lo;
                let bandwidth = (range / (values.len() as f64).sqrt()).max(1e-3 * range);
                let mass = values
                    .iter()
                    .map(|&c| normal_cdf((hi - c) / bandwidth) - normal_cdf((lo - c) / bandwidth))
                    .collect();
                Density::Kernel {
                    lo,
                    hi,
                    centers: values.to_vec(),
                    bandwidth,
                    mass,
                    integer: matches!(domain, Domain::Integer { .. }),
                }
            }
        }
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            Density::Uniform { domain } => uniform_coordinate(*domain, rng),
            Density::Categorical { probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return i as f64;
                    }
                }
                (probs.len() - 1) as f64
            }
            Density::Kernel { lo, hi, centers, bandwidth, integer, .. } => {
                let c = centers[rng.random_range(0..centers.len())];
                let mut v = c;
                for _ in 0..100 {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    let cand = c + bandwidth * z;
                    if cand >= *lo && cand <= *hi {
                        v = cand;
                        break;
                    }
                }
                if *integer {
                    v.round().clamp(*lo, *hi)
                } else {
                    v
                }
            }
        }
    }

    fn ln_pdf(&self, v: f64) -> f64 {
        match self {
            Density::Uniform { domain } => match *domain {
                Domain::Continuous { lo, hi } => -(hi - lo).ln(),
                Domain::Integer { lo, hi } => -(hi - lo + 1.0).ln(),
                Domain::Categorical { n } => -(n as f64).ln(),
            },
            Density::Categorical { probs } => probs[v as usize].ln(),
            Density::Kernel { centers, bandwidth, mass, .. } => {
                let norm = 1.0 / (bandwidth * (2.0 * PI).sqrt());
                let p: f64 = centers
                    .iter()
                    .zip(mass)
                    .map(|(&c, &m)| {
                        let z = (v - c) / bandwidth;
                        norm * (-0.5 * z * z).exp() / m.max(1e-300)
                    })
                    .sum::<f64>()
                    / centers.len() as f64;
                p.max(1e-300).ln()
            }
        }
    }
}

fn fit_dimension(space: &SearchSpace, dim: Dimension, trials: &[&Observation]) -> Density {
    let values: Vec<f64> = trials.iter().filter_map(|o| space.encode(&o.point, dim)).collect();
    Density::fit(space.domain(dim), &values)
}

struct PartitionModel {
    model: Density,
    beta: Density,
    blocks: Vec<(ModelFamily, Vec<(Dimension, Density)>)>,
}

impl PartitionModel {
    fn fit(space: &SearchSpace, trials: &[&Observation]) -> Self {
        let blocks = ModelFamily::ALL
            .iter()
            .map(|&f| {
                let dims = Dimension::block(f).iter().map(|&d| (d, fit_dimension(space, d, trials))).collect();
                (f, dims)
            })
            .collect();
        Self {
            model: fit_dimension(space, Dimension::Model, trials),
            beta: fit_dimension(space, Dimension::Beta, trials),
            blocks,
        }
    }

    fn block(&self, family: ModelFamily) -> &[(Dimension, Density)] {
        &self.blocks.iter().find(|(f, _)| *f == family).expect("every family has a block").1
    }

    fn ln_pdf(&self, coords: &[(Dimension, f64)], family: ModelFamily) -> f64 {
        let mut total = 0.0;
        for &(dim, v) in coords {
            total += match dim {
                Dimension::Model => self.model.ln_pdf(v),
                Dimension::Beta => self.beta.ln_pdf(v),
                _ => self.block(family).iter().find(|(d, _)| *d == dim).map_or(0.0, |(_, dens)| dens.ln_pdf(v)),
            };
        }
        total
    }
}

/// Acquisition score, encoded coordinates and family of one candidate.
type Candidate = (f64, Vec<(Dimension, f64)>, ModelFamily);

/// Suggests the next point given the observed (point, objective) history.
pub fn tpe_suggest(history: &[Observation], space: &SearchSpace, cfg: &TpeConfig, rng: &mut Rng) -> HyperparamPoint {
    if history.len() < cfg.n_startup.max(1) {
        return sample_random(space, rng);
    }
    let mut order: Vec<usize> = (0..history.len()).collect();
    // Stable sort: ties keep the earlier trial first.
    order.sort_by(|&a, &b| history[b].objective.total_cmp(&history[a].objective));
    let n_good = ((cfg.gamma * history.len() as f64).ceil() as usize).clamp(1, history.len());
    let good: Vec<&Observation> = order[..n_good].iter().map(|&i| &history[i]).collect();
    let bad: Vec<&Observation> = order[n_good..].iter().map(|&i| &history[i]).collect();
    let l = PartitionModel::fit(space, &good);
    let g = PartitionModel::fit(space, &bad);

    let mut best: Option<Candidate> = None;
    for _ in 0..cfg.n_candidates.max(1) {
        let m = l.model.sample(rng);
        let family = ModelFamily::ALL[m as usize];
        let mut coords = vec![(Dimension::Model, m), (Dimension::Beta, l.beta.sample(rng))];
        for (dim, dens) in l.block(family) {
            coords.push((*dim, dens.sample(rng)));
        }
        let score = l.ln_pdf(&coords, family) - g.ln_pdf(&coords, family);
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, coords, family));
        }
    }
    let (_, coords, family) = best.expect("at least one candidate");
    space.decode(family, |d| coords.iter().find(|(x, _)| *x == d).map_or(0.0, |(_, v)| *v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpo::space::ModelBlock;
    use crate::model::{LrHyperparams, RfHyperparams};
    use crate::rng::rng_from_seed;

    #[test]
    fn erfc_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-7);
        assert!((normal_cdf(1.959964) - 0.975).abs() < 1e-7);
        assert!((normal_cdf(-1.0) - 0.158655254).abs() < 1e-7);
    }

    #[test]
    fn empty_history_falls_back_to_random() {
        let space = SearchSpace::default();
        let cfg = TpeConfig::default();
        let mut a = rng_from_seed(3);
        let mut b = rng_from_seed(3);
        assert_eq!(tpe_suggest(&[], &space, &cfg, &mut a), sample_random(&space, &mut b));
    }

    #[test]
    fn good_family_is_preferred() {
        let space = SearchSpace::default();
        let mut rng = rng_from_seed(11);
        let mut history = Vec::new();
        for i in 0..40 {
            let beta = 10f64.powf(-2.0 + 4.0 * (i as f64 + 0.5) / 40.0);
            let (model, objective) = if i % 4 == 0 {
                (ModelBlock::Forest(RfHyperparams::new(2 + i % 30, 2 + i % 29, 0.5)), 1.0)
            } else {
                (ModelBlock::Logistic(LrHyperparams { c: 1.0, l1_ratio: 0.5 }), 0.0)
            };
            history.push(Observation { point: HyperparamPoint { beta, model }, objective });
        }
        let cfg = TpeConfig::default();
        let rf = (0..100)
            .filter(|_| tpe_suggest(&history, &space, &cfg, &mut rng).family() == ModelFamily::RandomForest)
            .count();
        assert!(rf > 90, "{rf}");
    }

    #[test]
    fn concentrates_on_quadratic_optimum() {
        let space = SearchSpace::default();
        let cfg = TpeConfig::default();
        let mut rng = rng_from_seed(21);
        let objective = |p: &HyperparamPoint| -(p.beta.log10() - 1.0).powi(2);
        let history: Vec<Observation> = (0..100)
            .map(|_| {
                let point = sample_random(&space, &mut rng);
                Observation { point, objective: objective(&point) }
            })
            .collect();
        let median = |mut v: Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        let tpe: Vec<f64> =
            (0..100).map(|_| (tpe_suggest(&history, &space, &cfg, &mut rng).beta.log10() - 1.0).abs()).collect();
        let random: Vec<f64> = (0..100).map(|_| (sample_random(&space, &mut rng).beta.log10() - 1.0).abs()).collect();
        assert!(median(tpe) < median(random));
    }

    #[test]
    fn suggestions_stay_in_space() {
        let space = SearchSpace::default();
        let cfg = TpeConfig::default();
        let mut rng = rng_from_seed(8);
        let mut history = Vec::new();
        for t in 0..80 {
            let p = tpe_suggest(&history, &space, &cfg, &mut rng);
            assert!(space.contains(&p), "{p:?}");
            history.push(Observation { point: p, objective: (t as f64 * 0.37).sin() });
        }
    }

    #[test]
    fn truncated_kernel_integrates_to_one() {
        let d = Density::fit(Domain::Continuous { lo: -2.0, hi: 2.0 }, &[-1.9, 0.0, 1.5]);
        let steps = 20_000;
        let h = 4.0 / steps as f64;
        let total: f64 = (0..steps).map(|i| d.ln_pdf(-2.0 + (i as f64 + 0.5) * h).exp() * h).sum();
        assert!((total - 1.0).abs() < 1e-5, "{total}");
    }
}
