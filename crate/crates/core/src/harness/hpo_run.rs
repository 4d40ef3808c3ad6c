use std::path::Path;

use rayon::prelude::*;

use super::output::{fmt_float, fmt_opt, write_csv, CsvRow};
use super::{mean_ci, ExperimentConfig, RunSeeds, SyntheticWorld};
use crate::error::Result;
use crate::hpo::{run_hpo, Algo, Estimator, HpoOutcome, HpoProblem, HpoSettings, Sampler, SamplerKind, SearchSpace};
use crate::model::ModelFamily;

/// One HPO run: a procedure at one β₀ for one seed.
#[derive(Debug, Clone)]
pub struct HpoCell {
    pub algo: Algo,
    pub beta0: f64,
    pub seed_index: usize,
    pub run_seed: u64,
    /// True value of the logging policy, the normalization divisor.
    pub v0: f64,
    pub outcome: HpoOutcome,
}

impl HpoCell {
    pub fn run_id(&self) -> String {
        format!("{}-b{}-s{}", self.algo, self.beta0, self.seed_index)
    }

    /// Normalized (validation, generalization) incumbent values per trial.
    pub fn normalized_curve(&self) -> Vec<(f64, f64)> {
        self.outcome
            .incumbent_curve()
            .into_iter()
            .map(|p| (p.val / self.v0, p.gen.expect("synthetic runs carry ground truth") / self.v0))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct HpoRunResult {
    pub sampler: SamplerKind,
    pub estimator: Estimator,
    pub cells: Vec<HpoCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub run_id: String,
    pub seed: usize,
    pub algo: Algo,
    pub sampler: SamplerKind,
    pub estimator: Estimator,
    pub beta0: f64,
    pub trial: usize,
    pub model_family: ModelFamily,
    pub beta: f64,
    pub c: Option<f64>,
    pub l1_ratio: Option<f64>,
    pub max_depth: Option<usize>,
    pub min_samples_split: Option<usize>,
    pub max_samples: Option<f64>,
    pub objective: f64,
    pub v_ips_val: f64,
    pub v_lower_val: f64,
    pub v_true: Option<f64>,
    pub tau: Option<f64>,
    pub alpha_t: f64,
    pub s_t: i8,
    pub incumbent: bool,
}

impl CsvRow for TrialRow {
    const HEADER: &'static [&'static str] = &[
        "run_id",
        "seed",
        "algo",
        "sampler",
        "estimator",
        "beta0",
        "trial",
        "model_family",
        "beta",
        "C",
        "l1_ratio",
        "max_depth",
        "min_samples_split",
        "max_samples",
        "objective",
        "v_ips_val",
        "v_lower_val",
        "v_true",
        "tau",
        "alpha_t",
        "s_t",
        "incumbent",
    ];

    fn record(&self) -> Vec<String> {
        let int = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        vec![
            self.run_id.clone(),
            self.seed.to_string(),
            self.algo.to_string(),
            self.sampler.as_str().into(),
            self.estimator.as_str().into(),
            fmt_float(self.beta0),
            self.trial.to_string(),
            self.model_family.to_string(),
            fmt_float(self.beta),
            fmt_opt(self.c),
            fmt_opt(self.l1_ratio),
            int(self.max_depth),
            int(self.min_samples_split),
            fmt_opt(self.max_samples),
            fmt_float(self.objective),
            fmt_float(self.v_ips_val),
            fmt_float(self.v_lower_val),
            fmt_opt(self.v_true),
            fmt_opt(self.tau),
            fmt_float(self.alpha_t),
            self.s_t.to_string(),
            self.incumbent.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algo: Algo,
    pub beta0: f64,
    pub trial: usize,
    pub mean_norm_val: f64,
    pub ci_val: f64,
    pub mean_norm_gen: f64,
    pub ci_gen: f64,
}

impl CsvRow for SummaryRow {
    const HEADER: &'static [&'static str] =
        &["algo", "beta0", "trial", "mean_norm_val", "ci_val", "mean_norm_gen", "ci_gen"];

    fn record(&self) -> Vec<String> {
        vec![
            self.algo.to_string(),
            fmt_float(self.beta0),
            self.trial.to_string(),
            fmt_float(self.mean_norm_val),
            fmt_float(self.ci_val),
            fmt_float(self.mean_norm_gen),
            fmt_float(self.ci_gen),
        ]
    }
}

impl HpoRunResult {
    pub fn trial_rows(&self) -> Vec<TrialRow> {
        let mut rows = Vec::new();
        for cell in &self.cells {
            let run_id = cell.run_id();
            for r in &cell.outcome.trials {
                let lr = r.theta.logistic();
                let rf = r.theta.forest();
                rows.push(TrialRow {
                    run_id: run_id.clone(),
                    seed: cell.seed_index,
                    algo: cell.algo,
                    sampler: self.sampler,
                    estimator: self.estimator,
                    beta0: cell.beta0,
                    trial: r.t,
                    model_family: r.theta.family(),
                    beta: r.theta.beta,
                    c: lr.map(|h| h.c),
                    l1_ratio: lr.map(|h| h.l1_ratio),
                    max_depth: rf.map(|h| h.max_depth),
                    min_samples_split: rf.map(|h| h.min_samples_split),
                    max_samples: rf.map(|h| h.max_samples),
                    objective: r.objective,
                    v_ips_val: r.v_ips_val,
                    v_lower_val: r.v_lower_val,
                    v_true: r.v_true,
                    tau: r.tau(),
                    alpha_t: r.alpha_t,
                    s_t: r.s_t,
                    incumbent: r.incumbent,
                });
            }
        }
        rows
    }

    /// (algo, β₀) cells in first-appearance order.
    pub fn groups(&self) -> Vec<(Algo, f64)> {
        let mut keys: Vec<(Algo, f64)> = Vec::new();
        for c in &self.cells {
            if !keys.iter().any(|&(a, b)| a == c.algo && b == c.beta0) {
                keys.push((c.algo, c.beta0));
            }
        }
        keys
    }

    pub fn cells_for(&self, algo: Algo, beta0: f64) -> impl Iterator<Item = &HpoCell> {
        self.cells.iter().filter(move |c| c.algo == algo && c.beta0 == beta0)
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for (algo, beta0) in self.groups() {
            let curves: Vec<Vec<(f64, f64)>> = self.cells_for(algo, beta0).map(HpoCell::normalized_curve).collect();
            let trials = curves.iter().map(Vec::len).min().unwrap_or(0);
            for t in 0..trials {
                let val: Vec<f64> = curves.iter().map(|c| c[t].0).collect();
                let gen: Vec<f64> = curves.iter().map(|c| c[t].1).collect();
                let (mean_norm_val, ci_val) = mean_ci(&val);
                let (mean_norm_gen, ci_gen) = mean_ci(&gen);
                rows.push(SummaryRow { algo, beta0, trial: t + 1, mean_norm_val, ci_val, mean_norm_gen, ci_gen });
            }
        }
        rows
    }

    /// Summary row of the last trial for one cell.
    pub fn final_summary(&self, algo: Algo, beta0: f64) -> Option<SummaryRow> {
        self.summary().into_iter().rfind(|r| r.algo == algo && r.beta0 == beta0)
    }

    /// Mean final α over seeds.
    pub fn mean_final_alpha(&self, algo: Algo, beta0: f64) -> f64 {
        let alphas: Vec<f64> = self.cells_for(algo, beta0).map(|c| c.outcome.final_alpha()).collect();
        mean_ci(&alphas).0
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_csv(&dir.join("trials.csv"), &self.trial_rows())?;
        write_csv(&dir.join("summary.csv"), &self.summary())
    }
}

/// Runs every (algo, β₀, seed) cell of `cfg` and collects the ledgers.
pub fn run_hpo_experiment(cfg: &ExperimentConfig) -> Result<HpoRunResult> {
    cfg.validate()?;
    let space = SearchSpace::default();
    let mut jobs = Vec::new();
    for &algo in &cfg.algo {
        for &beta0 in &cfg.beta0 {
            for k in 0..cfg.seeds {
                jobs.push((algo, beta0, k));
            }
        }
    }
    let run = |&(algo, beta0, k): &(Algo, f64, usize)| -> Result<HpoCell> {
        let seeds = RunSeeds::new(cfg.seed, k, cfg.fix_env);
        let world = SyntheticWorld::build(&seeds, beta0, cfg.n_train, cfg.n_val, cfg.n_test)?;
        let problem = HpoProblem {
            space: &space,
            sampler: Sampler::from_kind(cfg.sampler),
            train: &world.train,
            val: &world.val,
            logging: &world.logging,
            oracle: Some(&world.pool),
        };
        let settings = HpoSettings {
            surrogate: cfg.estimator,
            delta: cfg.delta,
            gamma: cfg.gamma,
            alpha_init: cfg.alpha_init,
            ..HpoSettings::for_algo(algo, cfg.trials, seeds.run)
        };
        let outcome = run_hpo(&problem, &settings)?;
        let v0 = outcome.logging_true.expect("oracle supplied");
        Ok(HpoCell { algo, beta0, seed_index: k, run_seed: seeds.run, v0, outcome })
    };
    let cells = cfg.thread_pool()?.install(|| jobs.par_iter().map(run).collect::<Result<Vec<_>>>())?;
    Ok(HpoRunResult { sampler: cfg.sampler, estimator: cfg.estimator, cells })
}
