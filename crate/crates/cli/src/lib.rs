//! Experiment runner: configure a backend, method, and dataset; decode with
//! bounded parallelism; and emit machine-readable reports and paired
//! comparisons.

pub mod config;
pub mod report;
pub mod runner;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use cgdpd_core::dataset::{load_folio_jsonl, validate_with_oracle, DatasetStats};
use cgdpd_core::decoder::{decision_path_enumeration, PathRow};
use cgdpd_core::metrics::{
    compute_metrics, confusion, diff_report, paired_bootstrap, MetricsError, PredictionRecord,
    Statistic,
};
use cgdpd_core::oracle::OracleConfig;

pub use config::{BackendChoice, HttpSettings, Method, RunConfig, SyntheticSpec};
pub use report::{Comparison, FailureRecord, ReportRecord, RunReport, SCHEMA_VERSION};

/// Failure classes map to distinct exit codes: config errors (2), backend
/// failures (3), IO and everything else (1).
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(String),
    Backend { example_id: String, error: String },
    Io(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Backend { example_id, error } => {
                write!(f, "backend failure on example {example_id}: {error}")
            }
            RunError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Backend { .. } => 3,
            RunError::Io(_) => 1,
        }
    }
}

/// Decodes the configured dataset and writes the report (and optional CSV).
pub fn cmd_run(config: &RunConfig) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let examples = runner::load_examples(config)?;
    let backend = runner::build_backend(config)?;
    let (mut records, failures) = runner::decode_all(backend.as_ref(), config, &examples)?;
    if records.is_empty() {
        return Err(RunError::Config(
            "every example failed; nothing to report".into(),
        ));
    }

    let baseline_comparison = match &config.baseline {
        None => None,
        Some(path) => {
            let baseline = RunReport::load(path)?;
            let comparison = compare_records(
                &baseline.prediction_records(),
                &records.iter().map(|r| r.record.clone()).collect::<Vec<_>>(),
                config.bootstrap_samples,
                config.seed,
            )?;
            let changed: BTreeMap<&str, ()> = comparison
                .diff
                .changed
                .iter()
                .map(|c| (c.example_id.as_str(), ()))
                .collect();
            for r in &mut records {
                r.record.changed_vs_baseline =
                    Some(changed.contains_key(r.record.example_id.as_str()));
            }
            Some(comparison)
        }
    };

    let prediction_records: Vec<PredictionRecord> =
        records.iter().map(|r| r.record.clone()).collect();
    let metrics = compute_metrics(&prediction_records).map_err(metrics_error)?;
    let confusion = confusion(&prediction_records).map_err(metrics_error)?;
    let total_calls = prediction_records.iter().map(|r| r.calls as u64).sum();

    let report = RunReport {
        schema_version: SCHEMA_VERSION.to_string(),
        generated_at_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        wall_clock_secs: started.elapsed().as_secs_f64(),
        config: config.clone(),
        n: prediction_records.len(),
        n_failed: failures.len(),
        total_calls,
        metrics,
        confusion,
        baseline_comparison,
        failures,
        records,
    };
    report.save(&config.out)?;
    if let Some(csv) = &config.csv {
        report.write_csv(csv)?;
    }
    Ok(report)
}

/// Paired comparison of two saved reports; writes and returns the result.
pub fn cmd_compare(
    report_a: &Path,
    report_b: &Path,
    bootstrap_samples: usize,
    seed: u64,
    out: &Path,
) -> Result<Comparison, RunError> {
    let a = RunReport::load(report_a)?;
    let b = RunReport::load(report_b)?;
    let comparison = compare_records(
        &a.prediction_records(),
        &b.prediction_records(),
        bootstrap_samples,
        seed,
    )?;
    report::save_json(&comparison, out)?;
    Ok(comparison)
}

fn compare_records(
    baseline: &[PredictionRecord],
    method: &[PredictionRecord],
    bootstrap_samples: usize,
    seed: u64,
) -> Result<Comparison, RunError> {
    let mut deltas = Vec::new();
    for statistic in [
        Statistic::Accuracy,
        Statistic::UnknownRate,
        Statistic::EpistemicUnknownRate,
    ] {
        match paired_bootstrap(baseline, method, statistic, bootstrap_samples, seed) {
            Ok(ci) => deltas.push(ci),
            // A statistic can be undefined (no decisive golds); the other
            // deltas still stand.
            Err(MetricsError::UndefinedStatistic(_)) => continue,
            Err(e) => return Err(metrics_error(e)),
        }
    }
    let diff = diff_report(baseline, method).map_err(metrics_error)?;
    Ok(Comparison {
        schema_version: SCHEMA_VERSION.to_string(),
        n: diff.n,
        bootstrap_samples,
        seed,
        deltas,
        diff,
    })
}

fn metrics_error(e: MetricsError) -> RunError {
    match e {
        MetricsError::IdMismatch(_) | MetricsError::BadResampleCount => {
            RunError::Config(e.to_string())
        }
        other => RunError::Io(other.to_string()),
    }
}

/// Audits a dataset's gold labels against the exact oracle and writes the
/// stats (including disagreement ids).
pub fn cmd_oracle_check(
    dataset: Option<&Path>,
    synthetic: Option<SyntheticSpec>,
    field_map: &cgdpd_core::dataset::FieldMap,
    strict: bool,
    oracle_cfg: &OracleConfig,
    seed: u64,
    out: &Path,
) -> Result<DatasetStats, RunError> {
    let (examples, mut stats) = match (dataset, synthetic) {
        (Some(path), None) => load_folio_jsonl(path, field_map, strict)
            .map_err(|e| RunError::Config(e.to_string()))?,
        (None, Some(spec)) => {
            let examples =
                cgdpd_core::dataset::generate_synthetic(spec.n, spec.decisive_fraction, seed)
                    .map_err(|e| RunError::Config(e.to_string()))?;
            (examples, DatasetStats::default())
        }
        _ => {
            return Err(RunError::Config(
                "oracle-check needs exactly one of --dataset or --synthetic".into(),
            ))
        }
    };
    let audit = validate_with_oracle(&examples, oracle_cfg);
    stats.n = audit.n;
    stats.label_counts = audit.label_counts;
    stats.oracle_disagreements = audit.oracle_disagreements;
    stats.budget_exceeded = audit.budget_exceeded;
    stats.disagreements = audit.disagreements;
    report::save_json(&stats, out)?;
    Ok(stats)
}

/// Writes the reachable decision-path table.
pub fn cmd_paths(out: &Path) -> Result<Vec<PathRow>, RunError> {
    let rows = decision_path_enumeration();
    report::save_json(&rows, out)?;
    Ok(rows)
}
