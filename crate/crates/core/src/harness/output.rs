use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use super::{BatchSummary, SessionRow, SweepTable};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn write_sessions_csv<W: io::Write>(rows: &[SessionRow], out: W) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), OutputError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes `sessions.csv` and `summary.json` into `dir`.
pub fn write_batch(summary: &BatchSummary, dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(dir)?;
    write_sessions_csv(&summary.rows, fs::File::create(dir.join("sessions.csv"))?)?;
    write_json(summary, &dir.join("summary.json"))
}

#[derive(Serialize)]
struct SweepLine {
    value: f64,
    p99_steps_to_convergence: Option<u64>,
    non_converged_count: usize,
    max_total_teaching_signals: u64,
    baseline_p99_steps_to_convergence: Option<u64>,
    baseline_non_converged_count: usize,
    baseline_max_total_teaching_signals: u64,
}

/// Writes `sweep.csv` (one line per value) and `sweep.json` into `dir`.
pub fn write_sweep(table: &SweepTable, dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
    for e in &table.entries {
        w.serialize(SweepLine {
            value: e.value,
            p99_steps_to_convergence: e.summary.p99_steps_to_convergence,
            non_converged_count: e.summary.non_converged_count,
            max_total_teaching_signals: e.summary.max_total_teaching_signals,
            baseline_p99_steps_to_convergence: e.baseline.p99_steps_to_convergence,
            baseline_non_converged_count: e.baseline.non_converged_count,
            baseline_max_total_teaching_signals: e.baseline.max_total_teaching_signals,
        })?;
    }
    w.flush()?;
    write_json(table, &dir.join("sweep.json"))
}
