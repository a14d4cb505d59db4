//! The decoding state machine and the single-call baseline.
//!
//! The full procedure: classify `H` and the mechanically negated `¬H`; accept
//! a negation-consistent pair outright when at least one side is decisive;
//! run the targeted Unknown fixer on each Unknown side; project through the
//! negation mapping when exactly one side ends up decisive; fall back to two
//! binary entailment probes when both stay Unknown; and adjudicate when both
//! are decisive but conflict. Two backend calls in the common case, six at
//! most, with the whole probe transcript captured in a [`Trace`].

use serde::{Deserialize, Serialize};

use crate::classifier::{
    adjudicate, AdjudicatePick, Backend, BackendError, BinaryAnswer, FixOutcome, Hypothesis, Label,
    NegationStrategy, Query, ScriptedBackend,
};
use crate::dataset::Example;
use crate::fol::render;

/// The deterministic label mapping induced by negating the hypothesis.
pub fn neg_map(y: Label) -> Label {
    match y {
        Label::True => Label::False,
        Label::False => Label::True,
        Label::Unknown => Label::Unknown,
    }
}

/// Does the pair `(y_H, y_¬H)` satisfy the negation-consistency constraint?
pub fn pair_consistent(y_h: Label, y_neg_h: Label) -> bool {
    y_neg_h == neg_map(y_h)
}

/// Where the decoding run settled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    /// Baseline marker: one classify call, no dual probing.
    SingleShot,
    ConsistentPair,
    ProjectedAfterFix,
    BinaryProbes,
    Adjudicated,
}

/// Full probe transcript of one decoding run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub y_h_initial: Label,
    /// Absent for the single-call baseline.
    pub y_neg_h_initial: Option<Label>,
    pub fix_h: Option<FixOutcome>,
    pub fix_neg_h: Option<FixOutcome>,
    pub probe_results: Option<(BinaryAnswer, BinaryAnswer)>,
    /// Whether the adjudicator backend was actually consulted.
    pub adjudicated: bool,
    pub stage: Stage,
    pub calls: u32,
}

/// Final label plus the transcript that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub label: Label,
    pub trace: Trace,
}

/// Transcript up to the point a backend call failed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartialTrace {
    pub y_h_initial: Option<Label>,
    pub y_neg_h_initial: Option<Label>,
    pub fix_h: Option<FixOutcome>,
    pub fix_neg_h: Option<FixOutcome>,
    pub probe_results: Option<(BinaryAnswer, BinaryAnswer)>,
    pub calls: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("decoding failed after {} calls: {source}", partial.calls)]
pub struct DecodeError {
    pub source: BackendError,
    pub partial: Box<PartialTrace>,
}

/// One call to the classifier; the baseline.
pub fn decide_single(backend: &dyn Backend, example: &Example) -> Result<Decision, DecodeError> {
    let hypothesis =
        Hypothesis::positive(example.hypothesis.clone(), example.hypothesis_text.clone());
    let query = example_query(example, &hypothesis);
    let label = backend.classify(&query).map_err(|source| DecodeError {
        source,
        partial: Box::default(),
    })?;
    Ok(Decision {
        label,
        trace: Trace {
            y_h_initial: label,
            y_neg_h_initial: None,
            fix_h: None,
            fix_neg_h: None,
            probe_results: None,
            adjudicated: false,
            stage: Stage::SingleShot,
            calls: 1,
        },
    })
}

/// The full dual-probing procedure.
pub fn decide_cgdpd(
    backend: &dyn Backend,
    negator: NegationStrategy,
    example: &Example,
) -> Result<Decision, DecodeError> {
    let h_pos = Hypothesis::positive(example.hypothesis.clone(), example.hypothesis_text.clone());
    let h_neg = negator.negate_hypothesis(&h_pos);
    let q_pos = example_query(example, &h_pos);
    let q_neg = example_query(example, &h_neg);

    let mut partial = PartialTrace::default();
    let fail = |source: BackendError, partial: &PartialTrace| DecodeError {
        source,
        partial: Box::new(partial.clone()),
    };

    // Stage 1: dual probing.
    let y_h_initial = backend.classify(&q_pos).map_err(|e| fail(e, &partial))?;
    partial.calls += 1;
    partial.y_h_initial = Some(y_h_initial);
    let y_neg_h_initial = backend.classify(&q_neg).map_err(|e| fail(e, &partial))?;
    partial.calls += 1;
    partial.y_neg_h_initial = Some(y_neg_h_initial);

    let mut trace = Trace {
        y_h_initial,
        y_neg_h_initial: Some(y_neg_h_initial),
        fix_h: None,
        fix_neg_h: None,
        probe_results: None,
        adjudicated: false,
        stage: Stage::ConsistentPair,
        calls: 2,
    };

    // A consistent pair with a decisive side needs nothing more. A consistent
    // (Unknown, Unknown) pair proceeds to fixing.
    if pair_consistent(y_h_initial, y_neg_h_initial)
        && !(y_h_initial == Label::Unknown && y_neg_h_initial == Label::Unknown)
    {
        trace.stage = Stage::ConsistentPair;
        return Ok(Decision {
            label: y_h_initial,
            trace,
        });
    }

    // Stage 2: targeted fixing on each Unknown side. The fixer's label
    // replaces the classification wholesale; the witness stays in the trace.
    let mut y_h = y_h_initial;
    let mut y_neg_h = y_neg_h_initial;
    if y_h == Label::Unknown {
        let fix = backend.fix_unknown(&q_pos).map_err(|e| fail(e, &partial))?;
        partial.calls += 1;
        partial.fix_h = Some(fix.clone());
        trace.calls += 1;
        y_h = fix.label;
        trace.fix_h = Some(fix);
    }
    if y_neg_h == Label::Unknown {
        let fix = backend.fix_unknown(&q_neg).map_err(|e| fail(e, &partial))?;
        partial.calls += 1;
        partial.fix_neg_h = Some(fix.clone());
        trace.calls += 1;
        y_neg_h = fix.label;
        trace.fix_neg_h = Some(fix);
    }

    // Stage 3: coherence projection when exactly one side is decisive.
    match (y_h.is_decisive(), y_neg_h.is_decisive()) {
        (true, false) => {
            trace.stage = Stage::ProjectedAfterFix;
            return Ok(Decision { label: y_h, trace });
        }
        (false, true) => {
            trace.stage = Stage::ProjectedAfterFix;
            return Ok(Decision {
                label: neg_map(y_neg_h),
                trace,
            });
        }
        (false, false) => {
            // Stage 4: both sides still Unknown, so binary entailment probes.
            let b_h = backend
                .entails_yes_no(&q_pos)
                .map_err(|e| fail(e, &partial))?;
            partial.calls += 1;
            let b_neg_h = backend
                .entails_yes_no(&q_neg)
                .map_err(|e| fail(e, &partial))?;
            partial.calls += 1;
            partial.probe_results = Some((b_h, b_neg_h));
            trace.calls += 2;
            trace.probe_results = Some((b_h, b_neg_h));
            trace.stage = Stage::BinaryProbes;
            let label = match (b_h, b_neg_h) {
                (BinaryAnswer::Yes, BinaryAnswer::No) => Label::True,
                (BinaryAnswer::No, BinaryAnswer::Yes) => Label::False,
                // (No, No): neither side supported. (Yes, Yes): conflicting
                // evidence, so abstain rather than privilege one side.
                _ => Label::Unknown,
            };
            return Ok(Decision { label, trace });
        }
        (true, true) => {}
    }

    // Stage 5: both decisive: adjudicate. A pair that became consistent
    // after fixing short-circuits without a backend call.
    let (label, consulted) =
        adjudicate(backend, &q_pos, y_h, y_neg_h).map_err(|e| fail(e, &partial))?;
    if consulted {
        trace.calls += 1;
    }
    trace.adjudicated = consulted;
    trace.stage = Stage::Adjudicated;
    Ok(Decision { label, trace })
}

fn example_query<'a>(example: &'a Example, hypothesis: &'a Hypothesis) -> Query<'a> {
    Query {
        example_id: &example.id,
        premises: &example.premises,
        premise_texts: &example.premise_texts,
        hypothesis,
    }
}

/// One reachable control path: the scripted outcomes that drove it and the
/// resulting stage, call count, and label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathRow {
    pub signature: String,
    pub stage: Stage,
    pub calls: u32,
    pub label: Label,
}

/// Drives the decoder with scripted backends through every combination of
/// initial label pair, fixer outcome, probe outcome, and adjudication pick,
/// and returns the deduplicated set of reachable paths.
pub fn decision_path_enumeration() -> Vec<PathRow> {
    let labels = [Label::True, Label::False, Label::Unknown];
    let answers = [BinaryAnswer::Yes, BinaryAnswer::No];
    let picks = [AdjudicatePick::Direct, AdjudicatePick::Mapped];
    let example = path_example();

    let mut rows: Vec<PathRow> = Vec::new();
    for y_h in labels {
        for y_neg_h in labels {
            for fix_h in labels {
                for fix_neg_h in labels {
                    for probe_h in answers {
                        for probe_neg_h in answers {
                            for pick in picks {
                                let backend = ScriptedBackend::new(y_h, y_neg_h)
                                    .with_fixes(fix_h, fix_neg_h)
                                    .with_probes(probe_h, probe_neg_h)
                                    .with_adjudicate_pick(pick);
                                let decision = decide_cgdpd(
                                    &backend,
                                    NegationStrategy::FormulaLevel,
                                    &example,
                                )
                                .expect("scripted backends cannot fail");
                                let row = PathRow {
                                    signature: signature_of(&decision.trace, &decision.label),
                                    stage: decision.trace.stage,
                                    calls: decision.trace.calls,
                                    label: decision.label,
                                };
                                if !rows.contains(&row) {
                                    rows.push(row);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    rows.sort_by(|a, b| (a.calls, &a.signature).cmp(&(b.calls, &b.signature)));
    rows
}

/// Describes the probes a trace actually exercised, so enumeration runs that
/// differ only in unused script entries collapse to one row.
fn signature_of(trace: &Trace, label: &Label) -> String {
    let mut out = format!(
        "init=({}, {})",
        trace.y_h_initial,
        trace
            .y_neg_h_initial
            .expect("dual probing always records both sides")
    );
    if let Some(fix) = &trace.fix_h {
        out.push_str(&format!(" fixH={}", fix.label));
    }
    if let Some(fix) = &trace.fix_neg_h {
        out.push_str(&format!(" fixNegH={}", fix.label));
    }
    if let Some((b_h, b_neg_h)) = &trace.probe_results {
        out.push_str(&format!(" probes=({}, {})", b_h.as_str(), b_neg_h.as_str()));
    }
    if trace.stage == Stage::Adjudicated {
        out.push_str(if trace.adjudicated {
            " adjudicated"
        } else {
            " adjudicate-skipped"
        });
        out.push_str(&format!(" -> {label}"));
    }
    out
}

fn path_example() -> Example {
    let premise = crate::fol::parse_formula("P(a)").expect("static formula");
    let hypothesis = crate::fol::parse_formula("Q(a)").expect("static formula");
    Example {
        id: "path-enumeration".into(),
        premise_texts: vec![render(&premise)],
        premises: vec![premise],
        hypothesis_text: render(&hypothesis),
        hypothesis,
        gold: Label::Unknown,
    }
}
