//! Backend that answers every probe exactly, via the finite-domain oracle.

use super::{Backend, BackendError, BinaryAnswer, ClassifierConfig, FixOutcome, Label, Query};
use crate::decoder::neg_map;
use crate::fol::{negate, render, Formula};
use crate::oracle::{entails, three_way_label, OracleConfig};

/// Exact backend: classification is the true three-way label, fixes reveal
/// the true label with a premise witness, probes are exact entailment, and
/// adjudication picks whichever candidate matches the truth.
#[derive(Debug, Clone, Default)]
pub struct OracleBackend {
    pub oracle_cfg: OracleConfig,
    pub classifier_cfg: ClassifierConfig,
}

impl OracleBackend {
    pub fn new(oracle_cfg: OracleConfig, classifier_cfg: ClassifierConfig) -> Self {
        Self {
            oracle_cfg,
            classifier_cfg,
        }
    }

    /// One premise from a minimal entailing subset of `premises` for
    /// `target`, found greedily: drop each premise whose removal preserves
    /// entailment, then quote the first survivor.
    fn witness_for(&self, premises: &[Formula], target: &Formula) -> Result<String, BackendError> {
        let mut kept: Vec<Formula> = premises.to_vec();
        let mut i = 0;
        while i < kept.len() {
            let mut trial = kept.clone();
            trial.remove(i);
            if entails(&trial, target, &self.oracle_cfg)?.is_yes() {
                kept = trial;
            } else {
                i += 1;
            }
        }
        Ok(match kept.first() {
            Some(premise) => render(premise),
            // Entailed by the empty set (a tautology): no premise
            // participates, quote the target itself.
            None => render(target),
        })
    }
}

impl Backend for OracleBackend {
    fn classify(&self, query: &Query) -> Result<Label, BackendError> {
        Ok(three_way_label(
            query.premises,
            &query.hypothesis.formula,
            &self.oracle_cfg,
        )?)
    }

    fn fix_unknown(&self, query: &Query) -> Result<FixOutcome, BackendError> {
        let h = &query.hypothesis.formula;
        let label = three_way_label(query.premises, h, &self.oracle_cfg)?;
        match label {
            Label::Unknown => Ok(FixOutcome::unknown(None)),
            Label::True => {
                let witness = self.witness_for(query.premises, h)?;
                Ok(FixOutcome::decisive(Label::True, witness))
            }
            Label::False => {
                let witness = self.witness_for(query.premises, &negate(h))?;
                Ok(FixOutcome::decisive(Label::False, witness))
            }
        }
    }

    fn entails_yes_no(&self, query: &Query) -> Result<BinaryAnswer, BackendError> {
        let verdict = entails(query.premises, &query.hypothesis.formula, &self.oracle_cfg)?;
        Ok(if verdict.is_yes() {
            BinaryAnswer::Yes
        } else {
            BinaryAnswer::No
        })
    }

    fn adjudicate(&self, query: &Query, y_h: Label, y_neg_h: Label) -> Result<Label, BackendError> {
        let truth = three_way_label(query.premises, &query.hypothesis.formula, &self.oracle_cfg)?;
        if truth == y_h {
            Ok(y_h)
        } else if truth == neg_map(y_neg_h) {
            Ok(neg_map(y_neg_h))
        } else {
            // Neither candidate is right (the truth is Unknown): tie rule
            // keeps the direct reading.
            Ok(y_h)
        }
    }
}
