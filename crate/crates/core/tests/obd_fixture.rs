use ciropt_core::obd::{fixture_dir, load_obd_csv, load_obd_pair, obd_experiment, ColumnMap, LoadOptions, ObdConfig};
use ciropt_core::ope::ips;
use ciropt_core::policy::UniformPolicy;

fn fixture(name: &str) -> std::path::PathBuf {
    fixture_dir().join(name)
}

#[test]
fn fixture_round_trip() {
    let load = load_obd_csv(fixture("obd_bts_50.csv"), &ColumnMap::default(), &LoadOptions::default()).unwrap();
    assert_eq!(load.dataset.len(), 50);
    assert_eq!(load.rejected, 0);
    let max_action = load.dataset.actions().iter().copied().max().unwrap();
    assert_eq!(load.dataset.n_actions(), max_action + 1);
}

#[test]
fn loader_is_lossless_on_mapped_columns() {
    let map = ColumnMap::default();
    let load = load_obd_csv(fixture("obd_bts_50.csv"), &map, &LoadOptions::default()).unwrap();
    let mut reader = csv::Reader::from_path(fixture("obd_bts_50.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let d = &load.dataset;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.unwrap();
        assert_eq!(d.action(i).to_string(), rec[col(&map.action)]);
        assert_eq!(d.reward(i), rec[col(&map.reward)].parse::<f64>().unwrap());
        assert_eq!(d.propensity(i), rec[col(&map.propensity)].parse::<f64>().unwrap());
        let x = d.context(i);
        for (j, name) in map.numeric.iter().enumerate() {
            assert_eq!(x[j], rec[col(name)].parse::<f64>().unwrap());
        }
        // Re-emit each categorical from its one-hot block.
        let mut offset = map.numeric.len();
        for (name, levels) in map.categorical.iter().zip(&load.vocabulary) {
            let block = &x[offset..offset + levels.len()];
            let hot = block.iter().position(|&v| v == 1.0).unwrap();
            assert_eq!(block.iter().sum::<f64>(), 1.0);
            assert_eq!(levels[hot], rec[col(name)]);
            offset += levels.len();
        }
    }
}

#[test]
fn zero_propensity_row_is_rejected() {
    let load =
        load_obd_csv(fixture("obd_bts_zero_propensity.csv"), &ColumnMap::default(), &LoadOptions::default()).unwrap();
    assert_eq!(load.dataset.len(), 49);
    assert_eq!(load.rejected, 1);
}

#[test]
fn subsample_is_deterministic() {
    let opts = LoadOptions { max_rows: Some(10), seed: 4, ..Default::default() };
    let a = load_obd_csv(fixture("obd_bts_50.csv"), &ColumnMap::default(), &opts).unwrap();
    let b = load_obd_csv(fixture("obd_bts_50.csv"), &ColumnMap::default(), &opts).unwrap();
    assert_eq!(a.dataset.len(), 10);
    assert_eq!(a.dataset, b.dataset);
}

#[test]
fn uniform_policy_on_uniform_logs_is_mean_click_rate() {
    let (_, test) = load_obd_pair(
        fixture("obd_bts_50.csv"),
        fixture("obd_random_50.csv"),
        &ColumnMap::default(),
        &LoadOptions::default(),
    )
    .unwrap();
    let d = &test.dataset;
    let v = ips(&UniformPolicy::new(d.n_actions()).unwrap(), d).unwrap().mean();
    assert!((v - d.mean_reward()).abs() < 1e-12);
}

#[test]
fn fixture_experiment_report() {
    let (train, test) = load_obd_pair(
        fixture("obd_bts_50.csv"),
        fixture("obd_random_50.csv"),
        &ColumnMap::default(),
        &LoadOptions::default(),
    )
    .unwrap();
    let rows = obd_experiment(&train.dataset, &test.dataset, &ObdConfig { trials: 8, ..Default::default() }).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.test_value_ips.is_finite()));
}
