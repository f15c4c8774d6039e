//! Plot-ready output: one CSV row per grid point plus a JSON sidecar with
//! the resolved configuration and the full per-point summaries.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mmd_outlier::simulation::SweepRecord;
use serde::{Deserialize, Serialize};

use crate::recipes::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorRow {
    pub detector: String,
    pub param_name: String,
    pub param_value: usize,
    pub mean_tau: f64,
    pub tau_std: f64,
    pub err_misclass: f64,
    pub err_false_reject: f64,
    pub err_false_alarm: f64,
    pub err_sum: f64,
    pub ci_half_width: f64,
    pub wall_ms: f64,
    pub horizon_stops: usize,
    pub trials: usize,
    pub seed: u64,
}

impl DetectorRow {
    pub fn new(label: &str, r: &SweepRecord) -> Self {
        let s = &r.summary;
        Self {
            detector: label.to_string(),
            param_name: r.param_name.to_string(),
            param_value: r.param_value,
            mean_tau: s.mean_tau,
            tau_std: s.tau_std,
            err_misclass: s.misclassification.rate,
            err_false_reject: s.false_reject.rate,
            err_false_alarm: s.false_alarm.rate,
            err_sum: s.error.rate,
            ci_half_width: s.error.ci_half_width,
            wall_ms: s.mean_wall_ms,
            horizon_stops: s.horizon_stops,
            trials: s.trials,
            seed: r.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmdRow {
    pub recipe: String,
    pub param_name: String,
    pub param_value: f64,
    pub mmd2_mean: f64,
    pub mmd2_std: f64,
    pub population: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct Sidecar<'a, R: Serialize, D: Serialize> {
    pub config: &'a ExperimentConfig,
    pub rows: &'a [R],
    pub details: D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub fn write_csv<R: Serialize, W: Write>(rows: &[R], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Writes rows to `out` (stdout when absent) and, for CSV written to a
/// file, the JSON sidecar next to it.
pub fn emit<R: Serialize, D: Serialize>(
    out: Option<&Path>,
    format: Format,
    config: &ExperimentConfig,
    rows: &[R],
    details: D,
) -> Result<()> {
    let sidecar = Sidecar { config, rows, details };
    match (format, out) {
        (Format::Csv, Some(path)) => {
            let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(rows, f)?;
            let side = sidecar_path(path);
            let f = std::fs::File::create(&side).with_context(|| format!("creating {}", side.display()))?;
            serde_json::to_writer_pretty(f, &sidecar)?;
        }
        (Format::Csv, None) => write_csv(rows, std::io::stdout().lock())?,
        (Format::Json, Some(path)) => {
            let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            serde_json::to_writer_pretty(f, &sidecar)?;
        }
        (Format::Json, None) => {
            serde_json::to_writer_pretty(std::io::stdout().lock(), &sidecar)?;
            println!();
        }
    }
    Ok(())
}
