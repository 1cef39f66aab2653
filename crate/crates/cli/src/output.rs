use std::path::{Path, PathBuf};

use izo_core::TraceRecord;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliResult;

/// One logged iteration of one run.
///
/// `subopt` is `f_value - f*` for the current iterate and is empty when the
/// optimum is unknown; `grad_norm_sq` is empty without a reference gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRecord {
    pub run_id: String,
    pub k: usize,
    pub f_value: f64,
    pub f_uniform_avg: f64,
    pub f_suffix_avg: f64,
    pub subopt: Option<f64>,
    pub grad_norm_sq: Option<f64>,
    pub delta_k: f64,
    pub mu_k: f64,
    pub queries: u64,
}

impl CsvRecord {
    pub fn from_trace(run_id: &str, r: &TraceRecord, f_star: Option<f64>) -> Self {
        Self {
            run_id: run_id.to_string(),
            k: r.k,
            f_value: r.f_value,
            f_uniform_avg: r.f_uniform_avg,
            f_suffix_avg: r.f_suffix_avg,
            subopt: f_star.map(|s| r.f_value - s),
            grad_norm_sq: r.grad_norm_sq,
            delta_k: r.delta,
            mu_k: r.mu,
            queries: r.queries,
        }
    }
}

/// A command's result: CSV text (preamble, header, rows) and a JSON summary.
#[derive(Debug, Clone)]
pub struct Report {
    pub csv: String,
    pub summary: Value,
}

impl Report {
    /// Serializes rows after the given preamble.
    pub fn from_rows<T: Serialize>(preamble: String, rows: &[T], summary: Value) -> CliResult<Self> {
        let mut w = csv::Writer::from_writer(preamble.into_bytes());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(Self { csv: String::from_utf8(bytes).expect("csv output is utf-8"), summary })
    }

    pub fn summary_text(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes") + "\n"
    }

    /// Writes the CSV to `path` and the summary next to it; returns the
    /// summary path.
    pub fn write(&self, path: &Path) -> CliResult<PathBuf> {
        std::fs::write(path, &self.csv)?;
        let mut summary = path.as_os_str().to_owned();
        summary.push(".summary.json");
        let summary = PathBuf::from(summary);
        std::fs::write(&summary, self.summary_text())?;
        Ok(summary)
    }
}

/// Parses the rows of a trace CSV, skipping the `#` preamble.
pub fn read_records(csv_text: &str) -> CliResult<Vec<CsvRecord>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(csv_text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<CsvRecord>, _>>()?)
}

/// Linear-interpolated quantile of a sample; `q` in `[0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Least-squares slope of `log10 y` against `log10 x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_preamble() {
        let rows = vec![CsvRecord {
            run_id: "cs:1".into(),
            k: 4,
            f_value: 0.25,
            f_uniform_avg: 1e-100,
            f_suffix_avg: 3.0,
            subopt: None,
            grad_norm_sq: Some(2.0),
            delta_k: 1e-6,
            mu_k: 0.5,
            queries: 4,
        }];
        let rep = Report::from_rows("# izo test\n# seed=1\n".into(), &rows, Value::Null).unwrap();
        let mut lines = rep.csv.lines();
        assert_eq!(lines.next(), Some("# izo test"));
        assert_eq!(lines.next(), Some("# seed=1"));
        assert_eq!(
            lines.next(),
            Some("run_id,k,f_value,f_uniform_avg,f_suffix_avg,subopt,grad_norm_sq,delta_k,mu_k,queries")
        );
        assert_eq!(read_records(&rep.csv).unwrap(), rows);
    }

    #[test]
    fn stats_helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25), 2.0);
        let x = [1e2, 1e3, 1e4];
        let y: Vec<f64> = x.iter().map(|v| 5.0 / v).collect();
        assert!((loglog_slope(&x, &y) + 1.0).abs() < 1e-12);
    }
}
