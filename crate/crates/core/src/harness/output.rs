//! CSV output with a fixed float format so reruns are byte-identical.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Rounds to 9 significant digits and prints the shortest representation
/// of the rounded value.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0.0".into();
    }
    format!("{rounded:?}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// A row of one of the harness CSV files.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

pub fn write_csv<R: CsvRow>(path: &Path, rows: &[R]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(R::HEADER).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(row.record()).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_float(0.1 + 0.2), "0.3");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_float(123456.789012), "123456.789");
        assert_eq!(fmt_float(-2.5e-12), "-2.5e-12");
        assert_eq!(fmt_float(-0.0), "0.0");
        assert_eq!(fmt_float(1.0), "1.0");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
    }

    struct Row(f64);

    impl CsvRow for Row {
        const HEADER: &'static [&'static str] = &["x"];
        fn record(&self) -> Vec<String> {
            vec![fmt_float(self.0)]
        }
    }

    #[test]
    fn writes_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.csv");
        write_csv(&path, &[Row(0.5), Row(2.0)]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "x\n0.5\n2.0\n");
    }
}
