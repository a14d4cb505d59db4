//! Dataset loading and generation.
//!
//! Loads FOLIO-style line-delimited JSON with FOL fields (field names are
//! remappable across release variants), normalizes the label vocabulary, and
//! audits gold labels against the exact oracle. Also generates seeded
//! synthetic datasets whose gold labels are verified by the oracle at
//! construction time.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::Label;
use crate::fol::{negate, render, Formula};
use crate::oracle::{check_consistency, three_way_label, OracleConfig, OracleError};
use crate::rng::{mix, SplitMix64};

/// One premise set / hypothesis pair with its gold label. Raw source strings
/// are kept alongside the parsed formulas for prompt rendering and witness
/// quoting.
#[derive(Debug, Clone)]
pub struct Example {
    pub id: String,
    pub premises: Vec<Formula>,
    pub premise_texts: Vec<String>,
    pub hypothesis: Formula,
    pub hypothesis_text: String,
    pub gold: Label,
}

/// What happened while loading or auditing a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n: usize,
    pub label_counts: BTreeMap<Label, u64>,
    pub parse_failures: usize,
    pub oracle_disagreements: usize,
    pub budget_exceeded: usize,
    /// Ids and reasons behind `oracle_disagreements`.
    pub disagreements: Vec<Disagreement>,
    /// One diagnostic per skipped line.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub example_id: String,
    pub gold: Label,
    pub reason: String,
}

/// JSON field names, remappable because FOLIO exports differ across releases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldMap {
    pub premises: String,
    pub conclusion: String,
    pub label: String,
    pub example_id: String,
}

impl Default for FieldMap {
    fn default() -> Self {
        Self {
            premises: "premises-FOL".into(),
            conclusion: "conclusion-FOL".into(),
            label: "label".into(),
            example_id: "example_id".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {message}")]
    FileNotFound { path: String, message: String },
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("unrecognized label string `{0}`")]
    UnknownLabelString(String),
    #[error("could not generate a verified {target} example after {attempts} attempts")]
    GenerationBudgetExceeded { target: Label, attempts: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Case-insensitive label vocabulary: `true`/`false`/`unknown`, plus
/// `uncertain` as used by FOLIO exports for the third label.
pub fn normalize_label(raw: &str) -> Result<Label, DatasetError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" => Ok(Label::True),
        "false" => Ok(Label::False),
        "unknown" | "uncertain" => Ok(Label::Unknown),
        _ => Err(DatasetError::UnknownLabelString(raw.to_string())),
    }
}

/// Loads a line-delimited JSON dataset. Blank lines are ignored; every other
/// line is either loaded or counted in `parse_failures` with a note (or, in
/// strict mode, aborts the load).
pub fn load_folio_jsonl(
    path: &Path,
    fields: &FieldMap,
    strict: bool,
) -> Result<(Vec<Example>, DatasetStats), DatasetError> {
    let file = std::fs::File::open(path).map_err(|e| DatasetError::FileNotFound {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let reader = std::io::BufReader::new(file);
    let mut examples = Vec::new();
    let mut stats = DatasetStats::default();

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| DatasetError::FileNotFound {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line, line_no, fields) {
            Ok(example) => {
                *stats.label_counts.entry(example.gold).or_insert(0) += 1;
                examples.push(example);
            }
            Err(message) => {
                if strict {
                    return Err(DatasetError::MalformedLine {
                        line: line_no,
                        message,
                    });
                }
                stats.parse_failures += 1;
                stats
                    .notes
                    .push(format!("line {line_no} skipped: {message}"));
            }
        }
    }
    stats.n = examples.len();
    Ok((examples, stats))
}

fn parse_line(line: &str, line_no: usize, fields: &FieldMap) -> Result<Example, String> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let object = value.as_object().ok_or("line is not a JSON object")?;

    let premise_values = object
        .get(&fields.premises)
        .and_then(|v| v.as_array())
        .ok_or_else(|| format!("missing `{}` array", fields.premises))?;
    let mut premises = Vec::with_capacity(premise_values.len());
    let mut premise_texts = Vec::with_capacity(premise_values.len());
    for (i, v) in premise_values.iter().enumerate() {
        let text = v
            .as_str()
            .ok_or_else(|| format!("premise {i} is not a string"))?;
        let formula =
            crate::fol::parse_formula(text).map_err(|e| format!("premise {i} `{text}`: {e}"))?;
        premises.push(formula);
        premise_texts.push(text.to_string());
    }
    if premises.is_empty() {
        return Err("premise array is empty".into());
    }

    let hypothesis_text = object
        .get(&fields.conclusion)
        .and_then(|v| v.as_str())
        .ok_or_else(|| format!("missing `{}` string", fields.conclusion))?;
    let hypothesis = crate::fol::parse_formula(hypothesis_text)
        .map_err(|e| format!("conclusion `{hypothesis_text}`: {e}"))?;

    let raw_label = object
        .get(&fields.label)
        .and_then(|v| v.as_str())
        .ok_or_else(|| format!("missing `{}` string", fields.label))?;
    let gold = normalize_label(raw_label).map_err(|e| e.to_string())?;

    let id = match object.get(&fields.example_id) {
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(serde_json::Value::Number(n)) => n.to_string(),
        _ => format!("line-{line_no}"),
    };

    Ok(Example {
        id,
        premises,
        premise_texts,
        hypothesis,
        hypothesis_text: hypothesis_text.to_string(),
        gold,
    })
}

/// Audits gold labels against the oracle. Golds are never mutated; every
/// mismatch, inconsistent premise set, or budget overrun is tallied.
pub fn validate_with_oracle(examples: &[Example], cfg: &OracleConfig) -> DatasetStats {
    let mut stats = DatasetStats {
        n: examples.len(),
        ..DatasetStats::default()
    };
    for ex in examples {
        *stats.label_counts.entry(ex.gold).or_insert(0) += 1;
        match three_way_label(&ex.premises, &ex.hypothesis, cfg) {
            Ok(label) if label == ex.gold => {}
            Ok(label) => {
                stats.oracle_disagreements += 1;
                stats.disagreements.push(Disagreement {
                    example_id: ex.id.clone(),
                    gold: ex.gold,
                    reason: format!("oracle label {label}"),
                });
            }
            Err(OracleError::BudgetExceeded { .. }) => {
                stats.budget_exceeded += 1;
            }
            Err(e) => {
                stats.oracle_disagreements += 1;
                stats.disagreements.push(Disagreement {
                    example_id: ex.id.clone(),
                    gold: ex.gold,
                    reason: e.to_string(),
                });
            }
        }
    }
    stats
}

/// Generates `n` examples over a small vocabulary with the requested share of
/// decisive golds (True and False alternating), every gold verified by the
/// oracle before emission. Fully deterministic in `(n, decisive_fraction,
/// seed)`.
pub fn generate_synthetic(
    n: usize,
    decisive_fraction: f64,
    seed: u64,
) -> Result<Vec<Example>, DatasetError> {
    if n == 0 {
        return Err(DatasetError::InvalidArgument("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&decisive_fraction) {
        return Err(DatasetError::InvalidArgument(
            "decisive_fraction must lie in [0, 1]".into(),
        ));
    }
    let n_decisive = ((n as f64) * decisive_fraction).round() as usize;
    let n_true = n_decisive.div_ceil(2);
    let mut targets = Vec::with_capacity(n);
    targets.extend(std::iter::repeat_n(Label::True, n_true));
    targets.extend(std::iter::repeat_n(Label::False, n_decisive - n_true));
    targets.extend(std::iter::repeat_n(Label::Unknown, n - n_decisive));
    // Deterministic shuffle so labels are not clumped by index.
    let mut shuffle_rng = SplitMix64::new(mix(seed, 0x5001));
    for i in (1..targets.len()).rev() {
        targets.swap(i, shuffle_rng.gen_range(i + 1));
    }

    let cfg = OracleConfig::default();
    let mut out = Vec::with_capacity(n);
    for (index, &target) in targets.iter().enumerate() {
        let mut generated = None;
        const MAX_ATTEMPTS: usize = 400;
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = SplitMix64::new(mix(mix(seed, index as u64), attempt as u64));
            let (premises, hypothesis) = candidate(&mut rng, target);
            let consistent = check_consistency(&premises, &cfg).unwrap_or(false);
            if !consistent {
                continue;
            }
            match three_way_label(&premises, &hypothesis, &cfg) {
                Ok(label) if label == target => {
                    let premise_texts = premises.iter().map(render).collect();
                    let hypothesis_text = render(&hypothesis);
                    out.push(Example {
                        id: format!("syn-{index:04}"),
                        premises,
                        premise_texts,
                        hypothesis,
                        hypothesis_text,
                        gold: target,
                    });
                    generated = Some(());
                    break;
                }
                _ => continue,
            }
        }
        if generated.is_none() {
            return Err(DatasetError::GenerationBudgetExceeded {
                target,
                attempts: MAX_ATTEMPTS,
            });
        }
    }
    Ok(out)
}

const PREDICATES: [&str; 4] = ["P0", "P1", "P2", "P3"];
const CONSTANTS: [&str; 3] = ["c0", "c1", "c2"];

fn fact(pred: &str, constant: &str) -> Formula {
    Formula::atom(pred, vec![crate::fol::constant(constant)])
}

fn rule(from: &str, to: &str, negated: bool) -> Formula {
    let head = Formula::atom(to, vec![crate::fol::variable("x")]);
    let head = if negated { Formula::not(head) } else { head };
    Formula::forall(
        "x",
        Formula::implies(Formula::atom(from, vec![crate::fol::variable("x")]), head),
    )
}

/// One candidate (premises, hypothesis) pair aimed at `target`; the caller
/// verifies with the oracle and retries on a miss (distractors occasionally
/// break the intended label).
fn candidate(rng: &mut SplitMix64, target: Label) -> (Vec<Formula>, Formula) {
    let c = CONSTANTS[rng.gen_range(CONSTANTS.len())];
    let mut pred_order: Vec<&str> = PREDICATES.to_vec();
    for i in (1..pred_order.len()).rev() {
        pred_order.swap(i, rng.gen_range(i + 1));
    }
    let (p0, p1, p2, spare) = (pred_order[0], pred_order[1], pred_order[2], pred_order[3]);

    let (mut premises, hypothesis) = match target {
        Label::Unknown => match rng.gen_range(3) {
            // Disjunctive underspecification.
            0 => (vec![Formula::or(fact(p0, c), fact(p1, c))], fact(p1, c)),
            // Unrelated fact.
            1 => {
                let other = CONSTANTS[rng.gen_range(CONSTANTS.len())];
                (vec![fact(p0, c)], fact(p1, other))
            }
            // Rule with no antecedent support.
            _ => (vec![rule(p0, p1, false)], fact(p1, c)),
        },
        decisive => {
            // Build an entailed goal, then negate it for gold-False.
            let (premises, goal) = match rng.gen_range(3) {
                // The goal is itself a premise.
                0 => (vec![fact(p0, c)], fact(p0, c)),
                // One-step chain.
                1 => (vec![fact(p0, c), rule(p0, p1, false)], fact(p1, c)),
                // Two-step chain, optionally ending negated.
                _ => {
                    let negate_head = rng.chance(0.5);
                    let goal = fact(p2, c);
                    let goal = if negate_head {
                        Formula::not(goal)
                    } else {
                        goal
                    };
                    (
                        vec![fact(p0, c), rule(p0, p1, false), rule(p1, p2, negate_head)],
                        goal,
                    )
                }
            };
            if decisive == Label::True {
                (premises, goal)
            } else {
                (premises, negate(&goal))
            }
        }
    };

    // Sprinkle distractor facts on a predicate the construction left unused.
    for _ in 0..rng.gen_range(3) {
        let other = CONSTANTS[rng.gen_range(CONSTANTS.len())];
        let distractor = if rng.chance(0.3) {
            Formula::not(fact(spare, other))
        } else {
            fact(spare, other)
        };
        premises.push(distractor);
    }
    (premises, hypothesis)
}
