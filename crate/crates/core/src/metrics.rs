//! Run-level statistics and paired comparisons between runs.
//!
//! Accuracy, Unknown rate, epistemic Unknown rate (Unknown predictions on
//! gold-decisive examples), coverage and answered accuracy, call histograms,
//! row-normalized confusion matrices, changed-prediction summaries, and
//! paired bootstrap confidence intervals on metric deltas.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::classifier::Label;
use crate::decoder::Stage;
use crate::rng::{mix, SplitMix64};

/// One example's outcome in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub example_id: String,
    pub gold: Label,
    pub predicted: Label,
    pub calls: u32,
    pub stage: Stage,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub changed_vs_baseline: Option<bool>,
}

/// Aggregate statistics of a run. Rates whose denominator can be empty are
/// `None` rather than a silent 0 or 1: `epistemic_unknown_rate` when no gold
/// is decisive, `answered_accuracy` when coverage is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub unknown_rate: f64,
    pub epistemic_unknown_rate: Option<f64>,
    pub coverage: f64,
    pub answered_accuracy: Option<f64>,
    pub mean_calls: f64,
    pub call_histogram: BTreeMap<u32, f64>,
    pub n: usize,
}

/// 3×3 confusion matrix indexed (gold, predicted) in label order
/// True, False, Unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[u64; 3]; 3],
    pub row_normalized: [[f64; 3]; 3],
    /// False where a gold label never occurs; that row normalizes to zeros.
    pub row_defined: [bool; 3],
}

/// Percentile confidence interval on a paired metric delta (B-run minus
/// A-run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub statistic: String,
    pub point_delta: f64,
    pub lo: f64,
    pub hi: f64,
    pub resamples: usize,
    /// Resamples where the statistic was defined on both runs.
    pub used_resamples: usize,
    pub seed: u64,
}

/// Which statistic a bootstrap comparison targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    Accuracy,
    UnknownRate,
    EpistemicUnknownRate,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Accuracy => "accuracy",
            Statistic::UnknownRate => "unknown_rate",
            Statistic::EpistemicUnknownRate => "epistemic_unknown_rate",
        }
    }

    fn compute(self, records: &[&PredictionRecord]) -> Option<f64> {
        let n = records.len();
        match self {
            Statistic::Accuracy => {
                Some(records.iter().filter(|r| r.predicted == r.gold).count() as f64 / n as f64)
            }
            Statistic::UnknownRate => Some(
                records
                    .iter()
                    .filter(|r| r.predicted == Label::Unknown)
                    .count() as f64
                    / n as f64,
            ),
            Statistic::EpistemicUnknownRate => {
                let decisive: Vec<_> = records.iter().filter(|r| r.gold.is_decisive()).collect();
                if decisive.is_empty() {
                    return None;
                }
                Some(
                    decisive
                        .iter()
                        .filter(|r| r.predicted == Label::Unknown)
                        .count() as f64
                        / decisive.len() as f64,
                )
            }
        }
    }
}

/// Changed-prediction summary between a baseline run and a method run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub n: usize,
    pub n_changed: usize,
    pub changed: Vec<ChangedPrediction>,
    /// Transition counts keyed `"<from>→<to>"`.
    pub transitions: BTreeMap<String, u64>,
    /// Fraction of method-run examples at each call count.
    pub call_fractions: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangedPrediction {
    pub example_id: String,
    pub from: Label,
    pub to: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no records")]
    EmptyInput,
    #[error("runs cover different example ids: {0}")]
    IdMismatch(String),
    #[error("bootstrap needs at least one resample")]
    BadResampleCount,
    #[error("statistic {0} is undefined on these records")]
    UndefinedStatistic(&'static str),
}

/// Aggregates a run. Coverage is computed as `1 − unknown_rate` so the pair
/// sums to one exactly.
pub fn compute_metrics(records: &[PredictionRecord]) -> Result<Metrics, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let refs: Vec<&PredictionRecord> = records.iter().collect();
    let n = records.len();
    let accuracy = Statistic::Accuracy.compute(&refs).expect("non-empty");
    let unknown_rate = Statistic::UnknownRate.compute(&refs).expect("non-empty");
    let epistemic_unknown_rate = Statistic::EpistemicUnknownRate.compute(&refs);
    let coverage = 1.0 - unknown_rate;
    let answered: Vec<_> = refs.iter().filter(|r| r.predicted.is_decisive()).collect();
    let answered_accuracy = if answered.is_empty() {
        None
    } else {
        Some(
            answered.iter().filter(|r| r.predicted == r.gold).count() as f64
                / answered.len() as f64,
        )
    };
    let mean_calls = records.iter().map(|r| r.calls as f64).sum::<f64>() / n as f64;
    let mut call_histogram = BTreeMap::new();
    for r in records {
        *call_histogram.entry(r.calls).or_insert(0.0) += 1.0 / n as f64;
    }
    Ok(Metrics {
        accuracy,
        unknown_rate,
        epistemic_unknown_rate,
        coverage,
        answered_accuracy,
        mean_calls,
        call_histogram,
        n,
    })
}

fn label_index(label: Label) -> usize {
    match label {
        Label::True => 0,
        Label::False => 1,
        Label::Unknown => 2,
    }
}

/// Tallies the (gold, predicted) confusion matrix and row-normalizes it.
pub fn confusion(records: &[PredictionRecord]) -> Result<Confusion, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut counts = [[0u64; 3]; 3];
    for r in records {
        counts[label_index(r.gold)][label_index(r.predicted)] += 1;
    }
    let mut row_normalized = [[0.0; 3]; 3];
    let mut row_defined = [false; 3];
    for (g, row) in counts.iter().enumerate() {
        let total: u64 = row.iter().sum();
        if total > 0 {
            row_defined[g] = true;
            for (p, &count) in row.iter().enumerate() {
                row_normalized[g][p] = count as f64 / total as f64;
            }
        }
    }
    Ok(Confusion {
        counts,
        row_normalized,
        row_defined,
    })
}

/// Pairs two runs by example id, resamples ids with replacement (the same
/// resample applied to both runs), and returns the percentile interval on
/// `statistic(B) − statistic(A)`. Resample `b` draws from a stream keyed by
/// `(seed, b)`, so results do not depend on evaluation order.
pub fn paired_bootstrap(
    records_a: &[PredictionRecord],
    records_b: &[PredictionRecord],
    statistic: Statistic,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapCI, MetricsError> {
    if resamples == 0 {
        return Err(MetricsError::BadResampleCount);
    }
    let aligned = align(records_a, records_b)?;
    let n = aligned.len();

    let full_a: Vec<&PredictionRecord> = aligned.iter().map(|(a, _)| *a).collect();
    let full_b: Vec<&PredictionRecord> = aligned.iter().map(|(_, b)| *b).collect();
    let point_delta = match (statistic.compute(&full_b), statistic.compute(&full_a)) {
        (Some(b), Some(a)) => b - a,
        _ => return Err(MetricsError::UndefinedStatistic(statistic.name())),
    };

    let mut deltas = Vec::with_capacity(resamples);
    for b in 0..resamples {
        let mut rng = SplitMix64::new(mix(seed, b as u64));
        let mut sample_a = Vec::with_capacity(n);
        let mut sample_b = Vec::with_capacity(n);
        for _ in 0..n {
            let i = rng.gen_range(n);
            sample_a.push(aligned[i].0);
            sample_b.push(aligned[i].1);
        }
        if let (Some(vb), Some(va)) = (statistic.compute(&sample_b), statistic.compute(&sample_a)) {
            deltas.push(vb - va);
        }
    }
    if deltas.is_empty() {
        return Err(MetricsError::UndefinedStatistic(statistic.name()));
    }
    deltas.sort_by(|a, b| a.partial_cmp(b).expect("deltas are finite"));
    let lo = percentile(&deltas, 0.025);
    let hi = percentile(&deltas, 0.975);
    Ok(BootstrapCI {
        statistic: statistic.name().to_string(),
        point_delta,
        lo,
        hi,
        resamples,
        used_resamples: deltas.len(),
        seed,
    })
}

/// Nearest-rank percentile on a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Lists the examples whose predicted label differs between two runs, with a
/// transition breakdown and the method run's call-count distribution.
pub fn diff_report(
    baseline: &[PredictionRecord],
    method: &[PredictionRecord],
) -> Result<DiffReport, MetricsError> {
    let aligned = align(baseline, method)?;
    let n = aligned.len();
    let mut changed = Vec::new();
    let mut transitions: BTreeMap<String, u64> = BTreeMap::new();
    for (base, meth) in &aligned {
        if base.predicted != meth.predicted {
            changed.push(ChangedPrediction {
                example_id: meth.example_id.clone(),
                from: base.predicted,
                to: meth.predicted,
            });
            *transitions
                .entry(format!("{}→{}", base.predicted, meth.predicted))
                .or_insert(0) += 1;
        }
    }
    let mut call_fractions = BTreeMap::new();
    for (_, meth) in &aligned {
        *call_fractions.entry(meth.calls).or_insert(0.0) += 1.0 / n as f64;
    }
    Ok(DiffReport {
        n,
        n_changed: changed.len(),
        changed,
        transitions,
        call_fractions,
    })
}

/// Pairs two runs by example id, erroring when the id sets differ.
fn align<'a>(
    a: &'a [PredictionRecord],
    b: &'a [PredictionRecord],
) -> Result<Vec<(&'a PredictionRecord, &'a PredictionRecord)>, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let ids_a: BTreeSet<&str> = a.iter().map(|r| r.example_id.as_str()).collect();
    let ids_b: BTreeSet<&str> = b.iter().map(|r| r.example_id.as_str()).collect();
    if ids_a.len() != a.len() || ids_b.len() != b.len() {
        return Err(MetricsError::IdMismatch("duplicate example ids".into()));
    }
    if ids_a != ids_b {
        let only_a: Vec<_> = ids_a.difference(&ids_b).take(3).collect();
        let only_b: Vec<_> = ids_b.difference(&ids_a).take(3).collect();
        return Err(MetricsError::IdMismatch(format!(
            "ids only in A: {only_a:?}…, only in B: {only_b:?}…"
        )));
    }
    let by_id: BTreeMap<&str, &PredictionRecord> =
        b.iter().map(|r| (r.example_id.as_str(), r)).collect();
    let mut pairs: Vec<(&PredictionRecord, &PredictionRecord)> = a
        .iter()
        .map(|ra| (ra, by_id[ra.example_id.as_str()]))
        .collect();
    pairs.sort_by(|(x, _), (y, _)| x.example_id.cmp(&y.example_id));
    Ok(pairs)
}
