use std::path::Path;
use std::process::{Command, Output};

fn ciropt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ciropt")).args(args).env_remove("CIROPT_WORKERS").output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name).display().to_string()
}

#[test]
fn invalid_settings_exit_with_usage_code() {
    for args in [
        &["run", "--trials", "0"][..],
        &["run", "--delta", "0.7"],
        &["run", "--beta0", "x"],
        &["bounds", "--n", "0"],
        &["obd"],
    ] {
        let out = ciropt(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn dumped_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = ciropt(&["run", "--beta0", "-3,20", "--trials", "7", "--algo", "cir", "--dump-config"]);
    assert!(first.status.success());
    let text = String::from_utf8(first.stdout).unwrap();
    let cfg: ciropt_core::ExperimentConfig = toml::from_str(&text).unwrap();
    assert_eq!(cfg.beta0, vec![-3.0, 20.0]);
    assert_eq!(cfg.trials, 7);

    let path = dir.path().join("cfg.toml");
    std::fs::write(&path, &text).unwrap();
    let second = ciropt(&["run", "--config", path.to_str().unwrap(), "--dump-config"]);
    assert!(second.status.success());
    assert_eq!(String::from_utf8(second.stdout).unwrap(), text);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    std::fs::write(&path, "trials = 40\nseeds = 3\n").unwrap();
    let out = ciropt(&["run", "--config", path.to_str().unwrap(), "--seeds", "5", "--dump-config"]);
    let cfg: ciropt_core::ExperimentConfig = toml::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!((cfg.trials, cfg.seeds), (40, 5));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    std::fs::write(&path, "trails = 40\n").unwrap();
    assert_eq!(ciropt(&["run", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

fn small_run(out: &Path, workers: &str) {
    let status = ciropt(&[
        "run",
        "--beta0",
        "3",
        "--algo",
        "baseline,cir",
        "--trials",
        "6",
        "--seeds",
        "2",
        "--n-train",
        "200",
        "--n-val",
        "200",
        "--n-test",
        "500",
        "--seed",
        "9",
        "--workers",
        workers,
        "--out",
        out.to_str().unwrap(),
    ])
    .status;
    assert!(status.success());
}

#[test]
fn run_output_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    small_run(&a, "1");
    small_run(&b, "2");
    for file in ["trials.csv", "summary.csv"] {
        let x = std::fs::read(a.join(file)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, std::fs::read(b.join(file)).unwrap(), "{file} differs");
    }
    let mut trials = csv::Reader::from_path(a.join("trials.csv")).unwrap();
    let header: Vec<String> = trials.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..3], ["run_id", "seed", "algo"]);
    assert!(header.iter().any(|h| h == "v_true"));
    assert_eq!(trials.records().count(), 2 * 2 * 6);
}

#[test]
fn obd_report_on_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let out = ciropt(&[
        "obd",
        "--train-logs",
        &fixture("obd_bts_50.csv"),
        "--test-logs",
        &fixture("obd_random_50.csv"),
        "--trials",
        "4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut report = csv::Reader::from_path(dir.path().join("obd_report.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = report.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let v: f64 = row[2].parse().unwrap();
        assert!(v.is_finite() && v >= 0.0);
    }
}
