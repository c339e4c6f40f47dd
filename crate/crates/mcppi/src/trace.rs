//! Trace and summary CSV files.
//!
//! Floats use 17 significant digits in exponent form, so the files are
//! locale-independent and round-trip bit-exactly.

use std::path::Path;

use crate::RunError;

pub const TRACE_HEADER: [&str; 9] =
    ["step", "iter", "alpha", "ess", "return_min", "return_median", "return_max", "smoothness", "wall_ms"];
pub const SUMMARY_HEADER: [&str; 5] = ["seed", "status", "final_return", "smoothness", "mean_ess"];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// Control step; −1 for MPC warm start, 0 for episodic runs.
    pub step: i64,
    pub iter: usize,
    pub alpha: f64,
    pub ess: f64,
    pub return_min: f64,
    pub return_median: f64,
    pub return_max: f64,
    pub smoothness: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub seed: u64,
    pub status: String,
    pub final_return: f64,
    pub smoothness: f64,
    pub mean_ess: f64,
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> RunError + '_ {
    move |source| RunError::Csv { path: path.display().to_string(), source }
}

pub fn write_trace(rows: &[TraceRow], path: &Path) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(TRACE_HEADER).map_err(csv_err(path))?;
    for r in rows {
        let mut rec = vec![r.step.to_string(), r.iter.to_string()];
        rec.extend(
            [r.alpha, r.ess, r.return_min, r.return_median, r.return_max, r.smoothness, r.wall_ms].map(fmt_float),
        );
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| RunError::Io { path: path.display().to_string(), source })
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, RunError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let bad = |what: &str| RunError::Io {
        path: path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad {what}")),
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let f = |i: usize| rec.get(i).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| bad(TRACE_HEADER[i]));
        rows.push(TraceRow {
            step: rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(|| bad("step"))?,
            iter: rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| bad("iter"))?,
            alpha: f(2)?,
            ess: f(3)?,
            return_min: f(4)?,
            return_median: f(5)?,
            return_max: f(6)?,
            smoothness: f(7)?,
            wall_ms: f(8)?,
        });
    }
    Ok(rows)
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.status.clone(),
            fmt_float(r.final_return),
            fmt_float(r.smoothness),
            fmt_float(r.mean_ess),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| RunError::Io { path: path.display().to_string(), source })
}
