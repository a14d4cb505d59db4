//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test -p cgdpd-cli --test acceptance -- --nocapture` to see
//! the per-criterion lines.

use std::collections::BTreeSet;
use std::time::Instant;

use cgdpd_cli::{cmd_compare, cmd_run, BackendChoice, Method, RunConfig, SyntheticSpec};
use cgdpd_core::classifier::{
    BinaryAnswer, Label, NegationStrategy, OracleBackend, ScriptedBackend,
};
use cgdpd_core::dataset::Example;
use cgdpd_core::decoder::{decide_cgdpd, decision_path_enumeration, neg_map, Stage};
use cgdpd_core::fol::{negate, parse_formula};
use cgdpd_core::metrics::{compute_metrics, paired_bootstrap, PredictionRecord, Statistic};
use cgdpd_core::oracle::{three_way_label, OracleConfig};
use cgdpd_core::reference;

fn pass(number: u32, name: &str, detail: &str) {
    println!("criterion {number} ({name}): PASS ({detail})");
}

fn synthetic_config(dir: &std::path::Path, name: &str, n: usize, frac: f64) -> RunConfig {
    let mut config = RunConfig::new(dir.join(name));
    config.synthetic = Some(SyntheticSpec {
        n,
        decisive_fraction: frac,
    });
    config.seed = 20250808;
    config
}

/// Criterion 1: on 1,000 generated function-free instances (Herbrand base
/// ≤ 12 atoms), the grounding-route labeler agrees with the independent
/// per-assignment evaluator on 100% of cases, in under a minute.
#[test]
fn criterion_1_oracle_correctness() {
    let started = Instant::now();
    let cfg = OracleConfig::default();
    let mut agreements = 0usize;
    for seed in 0..1000u64 {
        let instance = reference::random_instance(seed);
        let fast = three_way_label(&instance.premises, &instance.hypothesis, &cfg)
            .unwrap_or_else(|e| panic!("instance {seed}: oracle failed: {e}"));
        let slow = reference::three_way_label(&instance.premises, &instance.hypothesis, true)
            .unwrap_or_else(|e| panic!("instance {seed}: reference failed: {e}"));
        assert_eq!(fast, slow, "instance {seed}: routes disagree");
        agreements += 1;
    }
    let elapsed = started.elapsed();
    assert_eq!(agreements, 1000);
    assert!(
        elapsed.as_secs() < 60,
        "took {elapsed:?}, budget is one minute"
    );
    pass(
        1,
        "oracle correctness",
        &format!("1000/1000 agree in {elapsed:.2?}"),
    );
}

/// Criterion 2: negating the hypothesis maps the oracle label through
/// NegMap, with zero exceptions on the same 1,000 instances.
#[test]
fn criterion_2_negation_semantics() {
    let cfg = OracleConfig::default();
    for seed in 0..1000u64 {
        let instance = reference::random_instance(seed);
        let direct = three_way_label(&instance.premises, &instance.hypothesis, &cfg).unwrap();
        let negated =
            three_way_label(&instance.premises, &negate(&instance.hypothesis), &cfg).unwrap();
        assert_eq!(
            negated,
            neg_map(direct),
            "instance {seed} broke the label flip"
        );
    }
    pass(
        2,
        "negation semantics",
        "label flip held on 1000/1000 instances",
    );
}

/// Criterion 3: path enumeration reaches exactly the four dual-probing
/// stages with call counts spanning {2, 3, 4, 5, 6} and nothing outside.
#[test]
fn criterion_3_path_coverage() {
    let rows = decision_path_enumeration();
    let stages: BTreeSet<Stage> = rows.iter().map(|r| r.stage).collect();
    assert_eq!(
        stages,
        BTreeSet::from([
            Stage::ConsistentPair,
            Stage::ProjectedAfterFix,
            Stage::BinaryProbes,
            Stage::Adjudicated,
        ]),
        "unexpected stage set"
    );
    let calls: BTreeSet<u32> = rows.iter().map(|r| r.calls).collect();
    assert_eq!(
        calls,
        BTreeSet::from([2, 3, 4, 5, 6]),
        "unexpected call counts"
    );
    pass(
        3,
        "path coverage",
        &format!("{} paths, stages 4/4, calls 2–6", rows.len()),
    );
}

/// Criterion 4: the binary-probe decision rule, including abstention on the
/// conflicting (Yes, Yes) pair.
#[test]
fn criterion_4_probe_decision_rule() {
    let example = picuris_example();
    let cases = [
        (BinaryAnswer::Yes, BinaryAnswer::No, Label::True),
        (BinaryAnswer::No, BinaryAnswer::Yes, Label::False),
        (BinaryAnswer::No, BinaryAnswer::No, Label::Unknown),
        (BinaryAnswer::Yes, BinaryAnswer::Yes, Label::Unknown),
    ];
    for (b_h, b_neg_h, expected) in cases {
        let backend =
            ScriptedBackend::new(Label::Unknown, Label::Unknown).with_probes(b_h, b_neg_h);
        let decision = decide_cgdpd(&backend, NegationStrategy::FormulaLevel, &example).unwrap();
        assert_eq!(decision.trace.stage, Stage::BinaryProbes);
        assert_eq!(
            decision.label, expected,
            "probes ({b_h:?}, {b_neg_h:?}) must yield {expected}"
        );
    }
    pass(
        4,
        "probe decision rule",
        "(Yes,No)→True, (No,Yes)→False, (No,No)/(Yes,Yes)→Unknown",
    );
}

/// Criterion 5: with the exact backend, the full decoder is a no-harm
/// fixpoint: perfect accuracy, zero epistemic Unknown, 2 calls on every
/// gold-decisive example and 6 on every gold-Unknown example.
#[test]
fn criterion_5_oracle_fixpoint_no_harm() {
    let dir = tempfile::tempdir().unwrap();
    let config = synthetic_config(dir.path(), "oracle-cgdpd.json", 500, 0.5);
    let report = cmd_run(&config).unwrap();
    assert_eq!(report.n, 500);
    assert_eq!(report.metrics.accuracy, 1.0);
    assert_eq!(report.metrics.epistemic_unknown_rate, Some(0.0));
    for r in &report.records {
        let expected_calls = if r.record.gold.is_decisive() { 2 } else { 6 };
        assert_eq!(
            r.record.calls, expected_calls,
            "example {} (gold {}) used {} calls",
            r.record.example_id, r.record.gold, r.record.calls
        );
    }
    pass(
        5,
        "oracle fixpoint / no-harm",
        "accuracy 1.0, calls 2 (decisive) / 6 (Unknown) on 500 examples",
    );
}

/// Criterion 6: epistemic-Unknown noise (u = 0.5) halves the baseline's
/// decisive accuracy while the dual-probing decoder recovers it; the paired
/// bootstrap interval on the accuracy delta excludes zero.
#[test]
fn criterion_6_noise_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let noise = BackendChoice::Noisy {
        u: 0.5,
        f: 0.0,
        g: 0.0,
    };

    let mut single = synthetic_config(dir.path(), "noisy-single.json", 500, 0.5);
    single.backend = noise.clone();
    single.method = Method::Single;
    let single_report = cmd_run(&single).unwrap();

    let mut full = synthetic_config(dir.path(), "noisy-cgdpd.json", 500, 0.5);
    full.backend = noise;
    full.method = Method::Cgdpd;
    let full_report = cmd_run(&full).unwrap();

    let single_acc = single_report.metrics.accuracy;
    let full_acc = full_report.metrics.accuracy;
    assert_eq!(
        single_report.metrics.mean_calls, 1.0,
        "the baseline uses exactly one call"
    );
    assert!(
        (0.70..=0.80).contains(&single_acc),
        "single accuracy {single_acc} outside 0.75 ± 0.05"
    );
    assert!(full_acc >= 0.99, "decoder accuracy {full_acc} below 0.99");

    let comparison = cmd_compare(
        &single.out,
        &full.out,
        10_000,
        20250808,
        &dir.path().join("comparison.json"),
    )
    .unwrap();
    let accuracy_ci = comparison
        .deltas
        .iter()
        .find(|ci| ci.statistic == "accuracy")
        .expect("accuracy delta present");
    assert!(
        accuracy_ci.lo > 0.0,
        "accuracy delta CI [{}, {}] does not exclude zero",
        accuracy_ci.lo,
        accuracy_ci.hi
    );
    pass(
        6,
        "noise recovery",
        &format!(
            "single {:.3}, decoder {:.3}, delta CI [{:+.3}, {:+.3}]",
            single_acc, full_acc, accuracy_ci.lo, accuracy_ci.hi
        ),
    );
}

/// Criterion 7: deciding on genuinely Unknown cases (g = 0.3) hurts
/// gold-Unknown accuracy relative to g = 0, while overall accuracy still
/// beats the single-call baseline under the same noise.
#[test]
fn criterion_7_tradeoff_direction() {
    let dir = tempfile::tempdir().unwrap();

    let mut clean = synthetic_config(dir.path(), "g0-cgdpd.json", 500, 0.5);
    clean.backend = BackendChoice::Noisy {
        u: 0.5,
        f: 0.0,
        g: 0.0,
    };
    let clean_report = cmd_run(&clean).unwrap();

    let mut eager = synthetic_config(dir.path(), "g03-cgdpd.json", 500, 0.5);
    eager.backend = BackendChoice::Noisy {
        u: 0.5,
        f: 0.0,
        g: 0.3,
    };
    let eager_report = cmd_run(&eager).unwrap();

    let mut single = synthetic_config(dir.path(), "g03-single.json", 500, 0.5);
    single.backend = BackendChoice::Noisy {
        u: 0.5,
        f: 0.0,
        g: 0.3,
    };
    single.method = Method::Single;
    let single_report = cmd_run(&single).unwrap();

    let gold_unknown_accuracy = |report: &cgdpd_cli::RunReport| {
        let (correct, total) = report
            .records
            .iter()
            .filter(|r| r.record.gold == Label::Unknown)
            .fold((0usize, 0usize), |(c, t), r| {
                (c + usize::from(r.record.predicted == r.record.gold), t + 1)
            });
        correct as f64 / total as f64
    };

    let clean_gu = gold_unknown_accuracy(&clean_report);
    let eager_gu = gold_unknown_accuracy(&eager_report);
    assert!(
        eager_gu < clean_gu,
        "g=0.3 should reduce gold-Unknown accuracy ({eager_gu} vs {clean_gu})"
    );
    assert!(
        eager_report.metrics.accuracy > single_report.metrics.accuracy,
        "decoder accuracy {} should still exceed single accuracy {}",
        eager_report.metrics.accuracy,
        single_report.metrics.accuracy
    );
    pass(
        7,
        "trade-off direction",
        &format!(
            "gold-Unknown accuracy {:.3} → {:.3}; overall {:.3} > single {:.3}",
            clean_gu, eager_gu, eager_report.metrics.accuracy, single_report.metrics.accuracy
        ),
    );
}

/// Criterion 8: the hand-counted metric fixtures, at exact arithmetic (1e-12
/// where division order may differ).
#[test]
fn criterion_8_metrics_fixtures() {
    let rec = |id: &str, gold, predicted| PredictionRecord {
        example_id: id.to_string(),
        gold,
        predicted,
        calls: 1,
        stage: Stage::SingleShot,
        changed_vs_baseline: None,
    };
    let fixture = vec![
        rec("e1", Label::True, Label::True),
        rec("e2", Label::True, Label::Unknown),
        rec("e3", Label::False, Label::False),
        rec("e4", Label::Unknown, Label::Unknown),
    ];
    let m = compute_metrics(&fixture).unwrap();
    assert_eq!(m.accuracy, 0.75);
    assert_eq!(m.unknown_rate, 0.50);
    assert_eq!(m.epistemic_unknown_rate, Some(1.0 / 3.0));
    assert_eq!(m.coverage, 0.50);
    assert_eq!(m.answered_accuracy, Some(1.0));

    // 204 paired records, 130 vs 139 correct: the accuracy delta is 9/204.
    let run_a: Vec<PredictionRecord> = (0..204)
        .map(|i| {
            rec(
                &format!("x{i:03}"),
                Label::True,
                if i < 130 { Label::True } else { Label::False },
            )
        })
        .collect();
    let run_b: Vec<PredictionRecord> = (0..204)
        .map(|i| {
            rec(
                &format!("x{i:03}"),
                Label::True,
                if i < 139 { Label::True } else { Label::False },
            )
        })
        .collect();
    let direct =
        compute_metrics(&run_b).unwrap().accuracy - compute_metrics(&run_a).unwrap().accuracy;
    assert!((direct - 9.0 / 204.0).abs() < 1e-12);
    let ci = paired_bootstrap(&run_a, &run_b, Statistic::Accuracy, 100, 8).unwrap();
    assert!((ci.point_delta - 9.0 / 204.0).abs() < 1e-12);
    pass(
        8,
        "metrics fixtures",
        "4-record fixture exact; 204-record delta = 9/204 ± 1e-12",
    );
}

fn picuris_example() -> Example {
    let premise = parse_formula("In(picuris, newMexico) ∨ In(picuris, texas)").unwrap();
    let hypothesis = parse_formula("In(picuris, texas)").unwrap();
    Example {
        id: "picuris".into(),
        premise_texts: vec!["In(picuris, newMexico) ∨ In(picuris, texas)".into()],
        premises: vec![premise],
        hypothesis_text: "In(picuris, texas)".into(),
        hypothesis,
        gold: Label::Unknown,
    }
}

/// Criterion 9: the disjunctive mountain-range example runs the full
/// worst-case trace: (Unknown, Unknown) classifications, both fixes
/// Unknown, probes (No, No), final Unknown at 6 calls.
#[test]
fn criterion_9_qualitative_trace() {
    let backend = OracleBackend::default();
    let decision =
        decide_cgdpd(&backend, NegationStrategy::FormulaLevel, &picuris_example()).unwrap();
    let trace = &decision.trace;
    assert_eq!(decision.label, Label::Unknown);
    assert_eq!(trace.y_h_initial, Label::Unknown);
    assert_eq!(trace.y_neg_h_initial, Some(Label::Unknown));
    assert_eq!(trace.fix_h.as_ref().map(|f| f.label), Some(Label::Unknown));
    assert_eq!(
        trace.fix_neg_h.as_ref().map(|f| f.label),
        Some(Label::Unknown)
    );
    assert_eq!(
        trace.probe_results,
        Some((BinaryAnswer::No, BinaryAnswer::No))
    );
    assert_eq!(trace.stage, Stage::BinaryProbes);
    assert_eq!(trace.calls, 6);
    assert!(!trace.adjudicated);
    pass(
        9,
        "qualitative trace",
        "(U,U) → fixes U,U → probes (No,No) → Unknown @ 6 calls",
    );
}

/// Criterion 10: identical config and seed at worker counts 1 and 8 produce
/// identical reports modulo timestamps (and the worker-count echo itself).
#[test]
fn criterion_10_determinism_and_parallel_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let mut serial = synthetic_config(dir.path(), "serial.json", 200, 0.5);
    serial.backend = BackendChoice::Noisy {
        u: 0.3,
        f: 0.1,
        g: 0.2,
    };
    serial.concurrency = 1;
    cmd_run(&serial).unwrap();

    let mut parallel = synthetic_config(dir.path(), "parallel.json", 200, 0.5);
    parallel.backend = BackendChoice::Noisy {
        u: 0.3,
        f: 0.1,
        g: 0.2,
    };
    parallel.concurrency = 8;
    cmd_run(&parallel).unwrap();

    let normalize = |path: &std::path::Path| -> serde_json::Value {
        let mut value: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        // Timestamps, plus the two config fields that name this run's
        // execution rather than its results.
        value["generated_at_unix"] = serde_json::Value::Null;
        value["wall_clock_secs"] = serde_json::Value::Null;
        value["config"]["concurrency"] = serde_json::Value::Null;
        value["config"]["out"] = serde_json::Value::Null;
        value
    };
    let a = normalize(&serial.out);
    let b = normalize(&parallel.out);
    assert_eq!(a, b, "worker count changed the report contents");
    pass(
        10,
        "determinism and parallel invariance",
        "workers 1 and 8 agree byte-for-byte modulo timestamps",
    );
}
