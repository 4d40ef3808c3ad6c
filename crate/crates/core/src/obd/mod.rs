//! Loader for Open Bandit Dataset style CSV logs and the real-data protocol:
//! tune on logs of an adaptive policy, evaluate on uniform-random logs.

mod experiment;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use experiment::{empirical_logging_policy, obd_experiment, ObdConfig, ObdRow};

use crate::data::LoggedDataset;
use crate::error::{invalid, Error, Result};

/// Which CSV columns feed the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    /// Numeric context columns, copied as-is.
    pub numeric: Vec<String>,
    /// Categorical context columns, one-hot encoded.
    pub categorical: Vec<String>,
    pub action: String,
    pub reward: String,
    pub propensity: String,
    pub position: Option<String>,
    /// Keep only rows whose position column equals this value.
    pub position_value: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            numeric: (0..5).map(|i| format!("user-item_affinity_{i}")).collect(),
            categorical: (0..3).map(|i| format!("user_feature_{i}")).collect(),
            action: "item_id".into(),
            reward: "click".into(),
            propensity: "propensity_score".into(),
            position: Some("position".into()),
            position_value: Some("1".into()),
        }
    }
}

/// Category levels per categorical column, in first-seen order.
pub type Vocabulary = Vec<Vec<String>>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadOptions {
    /// Uniform sub-sample size.
    pub max_rows: Option<usize>,
    pub seed: u64,
    /// Reuse the encoding learned from another file; unseen levels encode as all zeros.
    pub vocabulary: Option<Vocabulary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObdLoad {
    pub dataset: LoggedDataset,
    pub vocabulary: Vocabulary,
    /// Rows dropped for a non-positive or unparsable propensity, or a non-binary reward.
    pub rejected: usize,
    /// Rows skipped by the position filter.
    pub filtered: usize,
}

fn column(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Schema { path: path.to_path_buf(), column: name.to_string() })
}

/// Loads an OBD-format CSV into a logged dataset.
pub fn load_obd_csv(path: impl AsRef<Path>, map: &ColumnMap, options: &LoadOptions) -> Result<ObdLoad> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let numeric: Vec<usize> = map.numeric.iter().map(|c| column(path, &headers, c)).collect::<Result<_>>()?;
    let categorical: Vec<usize> = map.categorical.iter().map(|c| column(path, &headers, c)).collect::<Result<_>>()?;
    let action_col = column(path, &headers, &map.action)?;
    let reward_col = column(path, &headers, &map.reward)?;
    let propensity_col = column(path, &headers, &map.propensity)?;
    let position_col = match (&map.position, &map.position_value) {
        (Some(name), Some(value)) => Some((column(path, &headers, name)?, value.clone())),
        _ => None,
    };

    struct Row {
        numeric: Vec<f64>,
        levels: Vec<String>,
        action: usize,
        reward: f64,
        propensity: f64,
    }
    let bad = |line: usize, what: &str, v: &str| {
        Error::InvalidInput(format!("{}: row {line}: bad {what} {v:?}", path.display()))
    };
    let (mut rows, mut rejected, mut filtered) = (Vec::new(), 0usize, 0usize);
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        if let Some((col, value)) = &position_col {
            if field(*col) != value {
                filtered += 1;
                continue;
            }
        }
        let propensity: f64 = match field(propensity_col).parse() {
            Ok(p) if p > 0.0 && p <= 1.0 => p,
            _ => {
                rejected += 1;
                continue;
            }
        };
        let reward: f64 = match field(reward_col).parse() {
            Ok(r) if r == 0.0 || r == 1.0 => r,
            _ => {
                rejected += 1;
                continue;
            }
        };
        let action: usize = field(action_col).parse().map_err(|_| bad(line + 1, "action", field(action_col)))?;
        let numeric = numeric
            .iter()
            .map(|&i| {
                field(i).parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(line + 1, "number", field(i)))
            })
            .collect::<Result<Vec<_>>>()?;
        let levels = categorical.iter().map(|&i| field(i).to_string()).collect();
        rows.push(Row { numeric, levels, action, reward, propensity });
    }
    if rows.is_empty() {
        return invalid(format!("{}: no usable rows ({rejected} rejected, {filtered} filtered)", path.display()));
    }

    let vocabulary: Vocabulary = match &options.vocabulary {
        Some(v) if v.len() == categorical.len() => v.clone(),
        Some(_) => return invalid("vocabulary does not match the categorical columns"),
        None => {
            let mut vocab = vec![Vec::<String>::new(); categorical.len()];
            for r in &rows {
                for (levels, level) in vocab.iter_mut().zip(&r.levels) {
                    if !levels.contains(level) {
                        levels.push(level.clone());
                    }
                }
            }
            vocab
        }
    };
    let lookup: Vec<HashMap<&str, usize>> =
        vocabulary.iter().map(|levels| levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect()).collect();
    let d_x = numeric.len() + vocabulary.iter().map(Vec::len).sum::<usize>();
    let n_actions = rows.iter().map(|r| r.action).max().unwrap_or(0) + 1;
    let mut contexts = Vec::with_capacity(rows.len() * d_x);
    for r in &rows {
        contexts.extend_from_slice(&r.numeric);
        for ((levels, index), level) in vocabulary.iter().zip(&lookup).zip(&r.levels) {
            let hot = index.get(level.as_str()).copied();
            contexts.extend((0..levels.len()).map(|j| if Some(j) == hot { 1.0 } else { 0.0 }));
        }
    }
    let dataset = LoggedDataset::new(
        d_x,
        n_actions,
        1.0,
        contexts,
        rows.iter().map(|r| r.action).collect(),
        rows.iter().map(|r| r.reward).collect(),
        rows.iter().map(|r| r.propensity).collect(),
    )?;
    let dataset = match options.max_rows {
        Some(m) => dataset.subsample(m, options.seed),
        None => dataset,
    };
    Ok(ObdLoad { dataset, vocabulary, rejected, filtered })
}

/// Loads training logs, then test logs with the training encoding, widening
/// both to a common action set.
pub fn load_obd_pair(
    train: impl AsRef<Path>,
    test: impl AsRef<Path>,
    map: &ColumnMap,
    options: &LoadOptions,
) -> Result<(ObdLoad, ObdLoad)> {
    let mut a = load_obd_csv(train, map, options)?;
    let test_options = LoadOptions { vocabulary: Some(a.vocabulary.clone()), ..options.clone() };
    let mut b = load_obd_csv(test, map, &test_options)?;
    let k = a.dataset.n_actions().max(b.dataset.n_actions());
    a.dataset = a.dataset.with_n_actions(k)?;
    b.dataset = b.dataset.with_n_actions(k)?;
    Ok((a, b))
}

/// Location of the fixtures shipped with the crate.
pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}
