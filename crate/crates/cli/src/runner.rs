//! Backend construction, dataset sourcing, and the bounded worker pool.
//!
//! Record order is fixed by example order and all randomness is keyed by
//! example id, so results are independent of the worker count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cgdpd_core::classifier::{
    Backend, CachedBackend, HttpBackend, NoiseModel, NoisyBackend, OracleBackend,
};
use cgdpd_core::dataset::{generate_synthetic, load_folio_jsonl, Example};
use cgdpd_core::decoder::{decide_cgdpd, decide_single, Decision};
use cgdpd_core::metrics::PredictionRecord;

use crate::config::{BackendChoice, Method, RunConfig};
use crate::report::{FailureRecord, ReportRecord};
use crate::RunError;

pub fn build_backend(config: &RunConfig) -> Result<Box<dyn Backend>, RunError> {
    let classifier_cfg = config.classifier_cfg();
    match &config.backend {
        BackendChoice::Oracle => Ok(Box::new(OracleBackend::new(
            config.oracle.clone(),
            classifier_cfg,
        ))),
        BackendChoice::Noisy { u, f, g } => {
            for (name, p) in [("u", u), ("f", f), ("g", g)] {
                if !(0.0..=1.0).contains(p) {
                    return Err(RunError::Config(format!(
                        "noise probability {name}={p} is outside [0, 1]"
                    )));
                }
            }
            let oracle = OracleBackend::new(config.oracle.clone(), classifier_cfg);
            Ok(Box::new(NoisyBackend::new(
                oracle,
                NoiseModel::new(*u, *f, *g, config.seed),
            )))
        }
        BackendChoice::Http(settings) => {
            let backend = HttpBackend::new(settings.to_backend_config(classifier_cfg))
                .map_err(|e| RunError::Config(e.to_string()))?;
            // Temperature-0 endpoints are deterministic in (S, H), so
            // memoization is safe there and only there.
            Ok(if config.no_cache {
                Box::new(CachedBackend::disabled(Box::new(backend)))
            } else {
                Box::new(CachedBackend::new(Box::new(backend)))
            })
        }
    }
}

/// Loads the configured dataset (file or synthetic), applying
/// `max_examples` as an upper bound after loading.
pub fn load_examples(config: &RunConfig) -> Result<Vec<Example>, RunError> {
    let mut examples = match (&config.dataset, &config.synthetic) {
        (Some(_), Some(_)) => {
            return Err(RunError::Config(
                "choose either --dataset or --synthetic, not both".into(),
            ))
        }
        (None, None) => {
            return Err(RunError::Config(
                "one of --dataset or --synthetic is required".into(),
            ))
        }
        (Some(path), None) => {
            let (examples, stats) = load_folio_jsonl(path, &config.field_map, config.strict)
                .map_err(|e| RunError::Config(e.to_string()))?;
            for note in &stats.notes {
                eprintln!("warning: {note}");
            }
            if stats.parse_failures > 0 {
                eprintln!(
                    "warning: {} of {} lines skipped during load",
                    stats.parse_failures,
                    stats.n + stats.parse_failures
                );
            }
            examples
        }
        (None, Some(spec)) => generate_synthetic(spec.n, spec.decisive_fraction, config.seed)
            .map_err(|e| RunError::Config(e.to_string()))?,
    };
    if let Some(cap) = config.max_examples {
        examples.truncate(cap);
    }
    if examples.is_empty() {
        return Err(RunError::Config("no examples to decode".into()));
    }
    Ok(examples)
}

/// Decodes every example on a bounded worker pool. Results are written into
/// per-example slots, so output order equals input order regardless of
/// scheduling.
pub fn decode_all(
    backend: &dyn Backend,
    config: &RunConfig,
    examples: &[Example],
) -> Result<(Vec<ReportRecord>, Vec<FailureRecord>), RunError> {
    let workers = config.concurrency.max(1).min(examples.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Decision, String>>>> =
        Mutex::new(vec![None; examples.len()]);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= examples.len() {
                    break;
                }
                let example = &examples[index];
                let outcome = match config.method {
                    Method::Single => decide_single(backend, example),
                    Method::Cgdpd => decide_cgdpd(backend, config.negator, example),
                }
                .map_err(|e| e.to_string());
                slots.lock().unwrap()[index] = Some(outcome);
            });
        }
    });

    let mut records = Vec::with_capacity(examples.len());
    let mut failures = Vec::new();
    for (example, slot) in examples.iter().zip(slots.into_inner().unwrap()) {
        match slot.expect("every slot is filled") {
            Ok(decision) => records.push(ReportRecord {
                record: PredictionRecord {
                    example_id: example.id.clone(),
                    gold: example.gold,
                    predicted: decision.label,
                    calls: decision.trace.calls,
                    stage: decision.trace.stage,
                    changed_vs_baseline: None,
                },
                trace: decision.trace,
            }),
            Err(error) => {
                if !config.keep_going {
                    return Err(RunError::Backend {
                        example_id: example.id.clone(),
                        error,
                    });
                }
                failures.push(FailureRecord {
                    example_id: example.id.clone(),
                    error,
                });
            }
        }
    }
    Ok((records, failures))
}
