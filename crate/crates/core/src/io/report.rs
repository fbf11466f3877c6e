//! Report files.
//!
//! A report named `name` is three files in the output directory:
//!
//! - `name.jsonl`: the payload, one JSON record per line. For a fixed seed it
//!   is byte-identical across runs.
//! - `name.txt`: the same content rendered as a table.
//! - `name.meta.json`: creation time, wall time and the tool version.

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::atomic_write;
use crate::error::{Error, Result};
use crate::eval::EvaluationReport;
use crate::select::SelectionReport;

#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    record: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

fn line<T: Serialize>(record: &'static str, body: &T) -> Result<String> {
    serde_json::to_string(&Record { record, body }).map_err(|e| Error::Serialization(e.to_string()))
}

/// Summary record, then one record per candidate.
pub fn selection_lines(report: &SelectionReport) -> Result<Vec<String>> {
    #[derive(Serialize)]
    struct Summary<'a> {
        chosen: usize,
        candidate: &'a crate::select::Candidate,
        training_size: usize,
        validation_size: usize,
        warnings: &'a [String],
    }
    let mut out = vec![line(
        "selection",
        &Summary {
            chosen: report.chosen,
            candidate: &report.candidate,
            training_size: report.training_size,
            validation_size: report.validation_size,
            warnings: &report.warnings,
        },
    )?];
    for row in &report.table {
        out.push(line("candidate", row)?);
    }
    Ok(out)
}

/// Summary record, then one record per run.
pub fn evaluation_lines(report: &EvaluationReport) -> Result<Vec<String>> {
    #[derive(Serialize)]
    struct Summary<'a> {
        protocol: &'a crate::eval::ProtocolSpec,
        mean_error: f64,
        runs: usize,
        excluded: usize,
        comparison: &'a Option<crate::eval::TTest>,
    }
    let mut out = vec![line(
        "evaluation",
        &Summary {
            protocol: &report.protocol,
            mean_error: report.mean_error,
            runs: report.runs.len(),
            excluded: report.excluded,
            comparison: &report.comparison,
        },
    )?];
    for run in &report.runs {
        out.push(line("run", run)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub command: String,
    pub created_unix: u64,
    pub wall_time_secs: f64,
    pub version: &'static str,
    pub seed: Option<u64>,
}

impl ReportMeta {
    pub fn now(command: &str, wall_time: Duration, seed: Option<u64>) -> Self {
        ReportMeta {
            command: command.to_string(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            wall_time_secs: wall_time.as_secs_f64(),
            version: env!("CARGO_PKG_VERSION"),
            seed,
        }
    }
}

/// Writes the three report files and returns the payload path.
pub fn write_report(dir: &Path, name: &str, lines: &[String], table: &str, meta: &ReportMeta) -> Result<PathBuf> {
    let mut payload = lines.join("\n");
    payload.push('\n');
    let path = dir.join(format!("{name}.jsonl"));
    atomic_write(&path, payload.as_bytes())?;
    atomic_write(&dir.join(format!("{name}.txt")), table.as_bytes())?;
    let meta = serde_json::to_string_pretty(meta).map_err(|e| Error::Serialization(e.to_string()))?;
    atomic_write(&dir.join(format!("{name}.meta.json")), meta.as_bytes())?;
    Ok(path)
}
