//! File formats, parallel rollouts and the experiment runner for `mcppi-core`.

pub mod config;
pub mod experiment;
pub mod parallel;
pub mod trace;

pub use config::{parse_config, parse_config_file, ExperimentConfig, Mode};
pub use experiment::{run_experiment, run_seed, ExperimentReport, ExperimentSpec, SeedOutcome};
pub use parallel::{par_batch_rollouts, Parallel};
pub use trace::{read_trace, write_summary, write_trace, SummaryRow, TraceRow};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },

    #[error("config syntax error{}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default(), key.as_ref().map(|k| format!(" (key `{k}`)")).unwrap_or_default())]
    Syntax { line: Option<usize>, key: Option<String>, message: String },

    #[error("config schema violations:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),

    #[error("invalid seed list: {0}")]
    Seeds(String),
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("csv error on {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

/// Parse `"0,1,2"` or ranges like `"0-24"` (inclusive) into a non-empty seed list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, ConfigError> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || ConfigError::Seeds(format!("`{part}` is not a seed or a range"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err(ConfigError::Seeds("no seeds given".into()));
    }
    Ok(seeds)
}
