//! Versioned, self-describing run reports: per-example records with full
//! traces plus the aggregate metrics, all in one JSON file so paired
//! comparisons never lose alignment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use cgdpd_core::decoder::Trace;
use cgdpd_core::metrics::{
    compute_metrics, confusion, BootstrapCI, Confusion, DiffReport, Metrics, PredictionRecord,
};

use crate::config::RunConfig;
use crate::RunError;

pub const SCHEMA_VERSION: &str = "cgdpd-report/1";

/// A prediction with its full probe transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    #[serde(flatten)]
    pub record: PredictionRecord,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub example_id: String,
    pub error: String,
}

/// Output of a paired comparison between two runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: String,
    pub n: usize,
    pub bootstrap_samples: usize,
    pub seed: u64,
    pub deltas: Vec<BootstrapCI>,
    pub diff: DiffReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    /// Timestamp fields; everything else is deterministic given the config.
    pub generated_at_unix: u64,
    pub wall_clock_secs: f64,
    pub config: RunConfig,
    pub n: usize,
    /// Examples whose backend errored under --keep-going; excluded from
    /// metrics denominators but counted here.
    pub n_failed: usize,
    pub total_calls: u64,
    pub metrics: Metrics,
    pub confusion: Confusion,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baseline_comparison: Option<Comparison>,
    pub failures: Vec<FailureRecord>,
    pub records: Vec<ReportRecord>,
}

impl RunReport {
    pub fn prediction_records(&self) -> Vec<PredictionRecord> {
        self.records.iter().map(|r| r.record.clone()).collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| RunError::Io(format!("serializing report: {e}")))?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| RunError::Io(format!("writing {}: {e}", path.display())))
    }

    /// Loads a report and re-derives its metrics and confusion matrix from
    /// the embedded records; a mismatch means the file was edited or
    /// corrupted and is rejected.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Io(format!("reading {}: {e}", path.display())))?;
        let report: RunReport = serde_json::from_str(&text)
            .map_err(|e| RunError::Io(format!("parsing {}: {e}", path.display())))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(RunError::Config(format!(
                "{}: unsupported schema version `{}` (expected `{SCHEMA_VERSION}`)",
                path.display(),
                report.schema_version
            )));
        }
        let records = report.prediction_records();
        let recomputed = compute_metrics(&records)
            .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        if recomputed != report.metrics {
            return Err(RunError::Io(format!(
                "{}: stored metrics do not match the embedded records",
                path.display()
            )));
        }
        let recomputed_confusion =
            confusion(&records).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        if recomputed_confusion != report.confusion {
            return Err(RunError::Io(format!(
                "{}: stored confusion matrix does not match the embedded records",
                path.display()
            )));
        }
        Ok(report)
    }

    /// Flat export for plotting: one row per example.
    pub fn write_csv(&self, path: &Path) -> Result<(), RunError> {
        let mut out = String::from("example_id,gold,predicted,calls,stage\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{:?}\n",
                r.record.example_id,
                r.record.gold,
                r.record.predicted,
                r.record.calls,
                r.record.stage
            ));
        }
        std::fs::write(path, out)
            .map_err(|e| RunError::Io(format!("writing {}: {e}", path.display())))
    }
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| RunError::Io(format!("serializing: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| RunError::Io(format!("writing {}: {e}", path.display())))
}
