//! Negation-consistent decoding for three-way logical question answering.
//!
//! Given a premise set `S` and a hypothesis `H`, a three-way classifier labels
//! the pair True (`S` entails `H`), False (`S` entails `¬H`), or Unknown
//! (neither). This crate implements a test-time decoding layer that queries a
//! classifier on both `H` and a mechanically negated `¬H`, projects the pair
//! onto a negation-consistent decision, and resolves residual Unknowns with
//! targeted fix prompts and binary entailment probes.
//!
//! The pieces:
//!
//! - [`fol`]: parser, renderer, and mechanical negation for function-free
//!   first-order formulas.
//! - [`oracle`]: exact three-way labeling over a finite Herbrand domain by
//!   exhaustive truth-table enumeration.
//! - [`mod@reference`]: an independent per-assignment model checker used to
//!   cross-validate the oracle (two code paths, same answers).
//! - [`classifier`]: the probe interface (classify / fix-unknown /
//!   entails-yes-no / adjudicate) with oracle, seeded-noise, HTTP, scripted,
//!   and caching backends.
//! - [`decoder`]: the decoding state machine and the single-call baseline,
//!   with full trace capture and call accounting.
//! - [`metrics`]: accuracy, Unknown rates, coverage, confusion matrices, and
//!   paired bootstrap confidence intervals.
//! - [`dataset`]: FOLIO-style JSONL loading and seeded synthetic datasets
//!   with oracle-verified gold labels.

pub mod classifier;
pub mod dataset;
pub mod decoder;
pub mod fol;
pub mod metrics;
pub mod oracle;
pub mod reference;

pub(crate) mod rng;

pub use classifier::{BinaryAnswer, Label};
pub use decoder::{Decision, Stage, Trace};
