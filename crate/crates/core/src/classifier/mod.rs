//! The probe interface the decoder drives, and its interchangeable backends.
//!
//! Every backend answers four probe kinds: a 3-way classification, a targeted
//! Unknown fixer, a binary entailment check, and an adjudication between two
//! conflicting decisive labels. Shipped backends: the exact oracle, a seeded
//! noise simulator layered on it, a remote HTTP model endpoint, a scripted
//! backend for tests and path enumeration, and a memoizing wrapper.

mod cache;
mod http;
mod noisy;
mod oracle_backend;
mod scripted;

use serde::{Deserialize, Serialize};

use crate::fol::{negate, render, Formula};
use crate::oracle::OracleError;

pub use cache::CachedBackend;
pub use http::{HttpBackend, HttpConfig};
pub use noisy::NoisyBackend;
pub use oracle_backend::OracleBackend;
pub use scripted::{AdjudicatePick, ScriptedBackend};

/// The three-way verdict. Serialized forms are exactly `"True"`, `"False"`,
/// `"Unknown"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    True,
    False,
    Unknown,
}

impl Label {
    pub fn is_decisive(self) -> bool {
        !matches!(self, Label::Unknown)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::True => "True",
            Label::False => "False",
            Label::Unknown => "Unknown",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Verdict of a binary entailment probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryAnswer {
    Yes,
    No,
}

impl BinaryAnswer {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryAnswer::Yes => "Yes",
            BinaryAnswer::No => "No",
        }
    }
}

/// Knobs shared by all backends. The Unknown penalty is a prompt-level
/// incentive rendered into the classify template; oracle-family backends
/// accept it and ignore it so the interface stays uniform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub unknown_penalty: f64,
    pub temperature: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            unknown_penalty: 0.5,
            temperature: 0.0,
        }
    }
}

/// Outcome of the targeted Unknown fixer. A decisive label must carry a
/// witness (a premise quote); `Unknown` never does.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixOutcome {
    pub label: Label,
    pub witness: Option<String>,
    pub missing_premise_note: Option<String>,
}

impl FixOutcome {
    pub fn decisive(label: Label, witness: impl Into<String>) -> Self {
        debug_assert!(label.is_decisive());
        let witness = witness.into();
        debug_assert!(!witness.is_empty());
        Self {
            label,
            witness: Some(witness),
            missing_premise_note: None,
        }
    }

    pub fn unknown(missing_premise_note: Option<String>) -> Self {
        Self {
            label: Label::Unknown,
            witness: None,
            missing_premise_note,
        }
    }

    /// Decisive ⇒ non-empty witness; Unknown ⇒ no witness.
    pub fn invariant_holds(&self) -> bool {
        match self.label {
            Label::Unknown => self.witness.is_none(),
            _ => self
                .witness
                .as_deref()
                .is_some_and(|w| !w.trim().is_empty()),
        }
    }
}

/// Parameters of the seeded noise simulator. Draws are a deterministic
/// function of (seed, example id, probe kind, hypothesis polarity), never of
/// call order.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Probability of replacing a decisive gold label with Unknown.
    pub epistemic_unknown_prob: f64,
    /// Probability of flipping a surviving decisive label (and of flipping a
    /// binary probe or adjudication choice).
    pub flip_prob: f64,
    /// Probability of replacing a genuine Unknown with a uniformly random
    /// decisive label.
    pub genuine_decide_prob: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(
        epistemic_unknown_prob: f64,
        flip_prob: f64,
        genuine_decide_prob: f64,
        seed: u64,
    ) -> Self {
        Self {
            epistemic_unknown_prob,
            flip_prob,
            genuine_decide_prob,
            seed,
        }
    }
}

/// Which probe a backend is being asked to answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProbeKind {
    Classify,
    FixUnknown,
    Entails,
    Adjudicate,
}

/// Whether a hypothesis probe concerns `H` itself or its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negated,
}

/// A hypothesis as presented to a backend: the formula (what oracle-family
/// backends evaluate) plus the prompt text (what the HTTP backend sends).
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub formula: Formula,
    pub prompt_text: String,
    pub polarity: Polarity,
}

impl Hypothesis {
    pub fn positive(formula: Formula, prompt_text: impl Into<String>) -> Self {
        Self {
            formula,
            prompt_text: prompt_text.into(),
            polarity: Polarity::Positive,
        }
    }
}

/// How `¬H` is constructed from `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NegationStrategy {
    /// Negate the formula and render the result. The default.
    FormulaLevel,
    /// Keep the original surface text and prefix the canonical `NOT:`
    /// wrapper. The formula is still negated so oracle-family backends see
    /// the same semantics.
    NotWrapper,
}

impl NegationStrategy {
    pub fn negate_hypothesis(self, h: &Hypothesis) -> Hypothesis {
        let formula = negate(&h.formula);
        let prompt_text = match self {
            NegationStrategy::FormulaLevel => render(&formula),
            NegationStrategy::NotWrapper => format!("NOT: {}", h.prompt_text),
        };
        Hypothesis {
            formula,
            prompt_text,
            polarity: Polarity::Negated,
        }
    }
}

/// One probe's input: the premises and a hypothesis, tagged with the example
/// id so deterministic noise can key off it.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub example_id: &'a str,
    pub premises: &'a [Formula],
    pub premise_texts: &'a [String],
    pub hypothesis: &'a Hypothesis,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("backend configuration error: {0}")]
    Config(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("response failed schema validation after {attempts} attempts; last response: {last}")]
    Schema { attempts: usize, last: String },
}

/// The four probes every backend implements.
pub trait Backend: Send + Sync {
    fn classify(&self, query: &Query) -> Result<Label, BackendError>;

    /// Invoked by the decoder only after `classify` returned Unknown for this
    /// hypothesis.
    fn fix_unknown(&self, query: &Query) -> Result<FixOutcome, BackendError>;

    fn entails_yes_no(&self, query: &Query) -> Result<BinaryAnswer, BackendError>;

    /// Chooses between the two negation-consistent assignments of a decisive
    /// but conflicting pair. Callers go through [`adjudicate`], which handles
    /// the consistent-pair short circuit; implementations may assume the pair
    /// conflicts.
    fn adjudicate(&self, query: &Query, y_h: Label, y_neg_h: Label) -> Result<Label, BackendError>;
}

/// Adjudication entry point. Returns the chosen label and whether the backend
/// was actually consulted: an already-consistent pair is returned as-is with
/// no backend call, since both candidate assignments coincide.
pub fn adjudicate(
    backend: &dyn Backend,
    query: &Query,
    y_h: Label,
    y_neg_h: Label,
) -> Result<(Label, bool), BackendError> {
    if !y_h.is_decisive() || !y_neg_h.is_decisive() {
        return Err(BackendError::PreconditionViolation(format!(
            "adjudicate requires decisive labels, got ({y_h}, {y_neg_h})"
        )));
    }
    if crate::decoder::neg_map(y_h) == y_neg_h {
        return Ok((y_h, false));
    }
    let chosen = backend.adjudicate(query, y_h, y_neg_h)?;
    debug_assert!(chosen == y_h || chosen == crate::decoder::neg_map(y_neg_h));
    Ok((chosen, true))
}

/// Canonical rendering of a premise list, used for prompts and cache keys.
pub fn premises_key(premises: &[Formula]) -> String {
    premises.iter().map(render).collect::<Vec<_>>().join("\n")
}
