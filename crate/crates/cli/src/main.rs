//! `ciropt`: runs the HPO, bounds, optimality-table, finite-grid and
//! real-data experiments and writes their CSV outputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use ciropt_core::harness::{
    run_bounds_study, run_hpo_experiment, run_optimality_table, run_prop_checks, table::TABLE_BETA0, write_csv,
};
use ciropt_core::hpo::{Algo, Estimator, SamplerKind};
use ciropt_core::obd::{load_obd_pair, obd_experiment, ColumnMap, LoadOptions, ObdConfig};
use ciropt_core::{ExperimentConfig, ExperimentKind};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ciropt", version, about = "Safe hyperparameter optimization for off-policy learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run HPO procedures on synthetic environments (trials.csv, summary.csv).
    Run(Flags),
    /// Lower-bound study: error rates and tightness (bounds.csv).
    Bounds(Flags),
    /// Value and optimality of the logging policy per β₀ (optimality.csv).
    Table(Flags),
    /// Finite-grid checks of optimistic bias and the regret identity (props.csv).
    Props(Flags),
    /// Tune on adaptive-policy logs, evaluate on uniform logs (obd_report.csv).
    Obd(Flags),
}

/// Every flag mirrors a config-file key (dashes become underscores).
#[derive(Debug, Args)]
struct Flags {
    /// TOML file with experiment settings; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta0: Option<Vec<f64>>,
    /// baseline, cir, cir-no-cso, cir-no-air
    #[arg(long, value_delimiter = ',')]
    algo: Option<Vec<Algo>>,
    /// random or tpe
    #[arg(long, value_parser = parse_sampler)]
    sampler: Option<SamplerKind>,
    /// ips or dr
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<Estimator>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_val: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha_init: Option<f64>,
    /// Share one environment across seeds.
    #[arg(long)]
    fix_env: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_test: Option<usize>,
    /// Validation sizes for the bounds study.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    grid_size: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "CIROPT_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    train_logs: Option<PathBuf>,
    #[arg(long)]
    test_logs: Option<PathBuf>,
    #[arg(long)]
    max_rows: Option<usize>,
    #[arg(long)]
    position: Option<String>,
}

fn parse_sampler(s: &str) -> Result<SamplerKind, String> {
    match s {
        "random" => Ok(SamplerKind::Random),
        "tpe" => Ok(SamplerKind::Tpe),
        _ => Err(format!("unknown sampler {s:?} (expected random or tpe)")),
    }
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    match s {
        "ips" => Ok(Estimator::Ips),
        "dr" => Ok(Estimator::Dr),
        _ => Err(format!("unknown estimator {s:?} (expected ips or dr)")),
    }
}

/// Defaults per subcommand before the config file and flags apply.
fn defaults(kind: ExperimentKind) -> ExperimentConfig {
    let base = ExperimentConfig { kind, ..Default::default() };
    match kind {
        ExperimentKind::HpoRun => base,
        ExperimentKind::BoundsStudy => ExperimentConfig { delta: 0.05, ..base },
        ExperimentKind::OptimalityTable => ExperimentConfig { beta0: TABLE_BETA0.to_vec(), ..base },
        ExperimentKind::PropChecks => ExperimentConfig { beta0: vec![3.0], seeds: 50, delta: 0.05, ..base },
        ExperimentKind::Obd => ExperimentConfig { trials: 100, ..base },
    }
}

fn read_config(path: &Path, base: ExperimentConfig) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file: toml::Table = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut merged = toml::Table::try_from(&base).map_err(|e| e.to_string())?;
    merged.extend(file);
    merged.try_into().map_err(|e: toml::de::Error| format!("{}: {e}", path.display()))
}

fn resolve(kind: ExperimentKind, f: &Flags) -> Result<ExperimentConfig, String> {
    let mut cfg = match &f.config {
        Some(path) => read_config(path, defaults(kind))?,
        None => defaults(kind),
    };
    cfg.kind = kind;
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = &f.$field {
                cfg.$field = v.clone();
            }
        )*};
    }
    set!(
        beta0, algo, sampler, estimator, trials, n_train, n_val, seeds, delta, gamma, alpha_init, seed, n_test, n,
        reps, grid_size, workers, out, position
    );
    if f.fix_env {
        cfg.fix_env = true;
    }
    if f.train_logs.is_some() {
        cfg.train_logs = f.train_logs.clone();
    }
    if f.test_logs.is_some() {
        cfg.test_logs = f.test_logs.clone();
    }
    if f.max_rows.is_some() {
        cfg.max_rows = f.max_rows;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    if kind == ExperimentKind::Obd && (cfg.train_logs.is_none() || cfg.test_logs.is_none()) {
        return Err("obd needs --train-logs and --test-logs".into());
    }
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig) -> anyhow::Result<Vec<PathBuf>> {
    let out = &cfg.out;
    Ok(match cfg.kind {
        ExperimentKind::HpoRun => {
            run_hpo_experiment(cfg)?.write(out)?;
            vec![out.join("trials.csv"), out.join("summary.csv")]
        }
        ExperimentKind::BoundsStudy => {
            let path = out.join("bounds.csv");
            write_csv(&path, &run_bounds_study(cfg)?)?;
            vec![path]
        }
        ExperimentKind::OptimalityTable => {
            let path = out.join("optimality.csv");
            write_csv(&path, &run_optimality_table(cfg)?)?;
            vec![path]
        }
        ExperimentKind::PropChecks => {
            let path = out.join("props.csv");
            write_csv(&path, &run_prop_checks(cfg)?)?;
            vec![path]
        }
        ExperimentKind::Obd => {
            let map = ColumnMap {
                position_value: (!cfg.position.is_empty()).then(|| cfg.position.clone()),
                ..ColumnMap::default()
            };
            let options = LoadOptions { max_rows: cfg.max_rows, seed: cfg.seed, vocabulary: None };
            let (train, test) = load_obd_pair(
                cfg.train_logs.as_ref().expect("checked in resolve"),
                cfg.test_logs.as_ref().expect("checked in resolve"),
                &map,
                &options,
            )?;
            for (name, load) in [("train", &train), ("test", &test)] {
                eprintln!(
                    "{name} logs: {} rows kept, {} rejected, {} filtered by position",
                    load.dataset.len(),
                    load.rejected,
                    load.filtered
                );
            }
            let obd = ObdConfig {
                trials: cfg.trials,
                sampler: cfg.sampler,
                delta: cfg.delta,
                gamma: cfg.gamma,
                alpha_init: cfg.alpha_init,
                seed: cfg.seed,
                ..ObdConfig::default()
            };
            let rows = obd_experiment(&train.dataset, &test.dataset, &obd)?;
            let path = out.join("obd_report.csv");
            write_csv(&path, &rows)?;
            vec![path]
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, flags) = match &cli.command {
        Command::Run(f) => (ExperimentKind::HpoRun, f),
        Command::Bounds(f) => (ExperimentKind::BoundsStudy, f),
        Command::Table(f) => (ExperimentKind::OptimalityTable, f),
        Command::Props(f) => (ExperimentKind::PropChecks, f),
        Command::Obd(f) => (ExperimentKind::Obd, f),
    };
    let cfg = match resolve(kind, flags) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            return ExitCode::from(2);
        }
    };
    if flags.dump_config {
        match toml::to_string(&cfg) {
            Ok(text) => {
                print!("{text}");
                return ExitCode::SUCCESS;
            }
            Err(e) => {
                eprintln!("error: cannot serialize configuration: {e}");
                return ExitCode::from(1);
            }
        }
    }
    match execute(&cfg).context("experiment failed") {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
