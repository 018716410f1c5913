//! CSV results and the JSON metadata sidecar.
//!
//! Columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `protocol` | `cff` or `rcs` |
//! | `alpha` | pull fraction of the frame |
//! | `S` | slots per frame |
//! | `L_ms` | latency target; blank for metrics without one |
//! | `pull_rate_pps`, `push_rate_pps` | offered load; blank when searched for or not applicable |
//! | `metric_name` | see below |
//! | `metric_value` | blank when the metric is undefined for this point |
//! | `replications` | independent runs pooled into the value |
//! | `seed` | master seed |
//! | `error` | empty unless the point failed or the value needs a caveat |
//!
//! Metric names: `pull_reliability`, `push_reliability`,
//! `pull_latency_quantile_ms`, `push_latency_quantile_ms` (cff simulate);
//! `max_pull_rate_pps`, `max_push_rate_pps` (cff capacity);
//! `retrieval_accuracy`, `push_success_prob` (rcs).
//!
//! Numbers use Rust's shortest round-trip formatting with `.` as the
//! decimal separator; lines end in LF.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::run::{run_sweep, Row};

pub const COLUMNS: [&str; 11] = [
    "protocol",
    "alpha",
    "S",
    "L_ms",
    "pull_rate_pps",
    "push_rate_pps",
    "metric_name",
    "metric_value",
    "replications",
    "seed",
    "error",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record([
            r.protocol.to_string(),
            r.alpha.to_string(),
            r.slots_per_frame.to_string(),
            opt(r.latency_ms),
            opt(r.pull_rate_pps),
            opt(r.push_rate_pps),
            r.metric_name.to_string(),
            opt(r.metric_value),
            r.replications.to_string(),
            r.seed.to_string(),
            r.error.clone(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn csv_bytes(rows: &[Row]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    buf
}

/// Sidecar path: `results.csv` becomes `results.meta.json`.
pub fn metadata_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub software: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub rows: usize,
    pub wall_time_s: f64,
    /// Fully resolved config; loading it back reproduces the CSV.
    pub config: &'a ExperimentConfig,
}

#[derive(Debug)]
pub struct Report {
    pub csv_path: PathBuf,
    pub metadata_path: PathBuf,
    pub rows: usize,
    pub failed_rows: usize,
    pub wall_time_s: f64,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    std::fs::write(path, bytes).map_err(|source| HarnessError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the sweep and writes the CSV at `config.output` plus its sidecar.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, HarnessError> {
    let start = Instant::now();
    let rows = run_sweep(config)?;
    let wall_time_s = start.elapsed().as_secs_f64();

    let csv_path = config.output.clone();
    write_file(&csv_path, &csv_bytes(&rows))?;

    let meta = Metadata {
        software: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: config.master_seed,
        rows: rows.len(),
        wall_time_s,
        config,
    };
    let metadata_path = metadata_path(&csv_path);
    let mut json = serde_json::to_vec_pretty(&meta).expect("metadata serializes");
    json.push(b'\n');
    write_file(&metadata_path, &json)?;

    Ok(Report {
        csv_path,
        metadata_path,
        rows: rows.len(),
        failed_rows: rows.iter().filter(|r| r.metric_value.is_none()).count(),
        wall_time_s,
    })
}
