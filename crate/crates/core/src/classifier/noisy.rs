//! Seeded noise simulator layered on the exact oracle.
//!
//! Starts from the oracle's answer and perturbs it with three independent
//! probabilities: `u` turns a decisive classification into an epistemic
//! Unknown, `f` flips decisive labels / binary verdicts / adjudication picks,
//! and `g` forces a decision on a genuinely Unknown case. All draws are keyed
//! by (seed, example id, probe kind, polarity), so outputs are identical
//! across runs and thread schedules.

use super::{
    Backend, BackendError, BinaryAnswer, FixOutcome, Label, NoiseModel, OracleBackend, Polarity,
    ProbeKind, Query,
};
use crate::decoder::neg_map;
use crate::rng::{fnv1a64, mix, SplitMix64};

#[derive(Debug, Clone)]
pub struct NoisyBackend {
    inner: OracleBackend,
    noise: NoiseModel,
}

impl NoisyBackend {
    pub fn new(inner: OracleBackend, noise: NoiseModel) -> Self {
        Self { inner, noise }
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    fn stream(&self, query: &Query, kind: ProbeKind) -> SplitMix64 {
        let id_hash = fnv1a64(query.example_id.as_bytes());
        let kind_tag = match kind {
            ProbeKind::Classify => 1,
            ProbeKind::FixUnknown => 2,
            ProbeKind::Entails => 3,
            ProbeKind::Adjudicate => 4,
        };
        let polarity_tag = match query.hypothesis.polarity {
            Polarity::Positive => 1,
            Polarity::Negated => 2,
        };
        SplitMix64::new(mix(
            mix(self.noise.seed, id_hash),
            kind_tag << 8 | polarity_tag,
        ))
    }
}

impl Backend for NoisyBackend {
    fn classify(&self, query: &Query) -> Result<Label, BackendError> {
        let gold = self.inner.classify(query)?;
        let mut rng = self.stream(query, ProbeKind::Classify);
        Ok(match gold {
            Label::True | Label::False => {
                if rng.chance(self.noise.epistemic_unknown_prob) {
                    Label::Unknown
                } else if rng.chance(self.noise.flip_prob) {
                    neg_map(gold)
                } else {
                    gold
                }
            }
            Label::Unknown => {
                if rng.chance(self.noise.genuine_decide_prob) {
                    if rng.chance(0.5) {
                        Label::True
                    } else {
                        Label::False
                    }
                } else {
                    Label::Unknown
                }
            }
        })
    }

    fn fix_unknown(&self, query: &Query) -> Result<FixOutcome, BackendError> {
        let mut rng = self.stream(query, ProbeKind::FixUnknown);
        if rng.chance(1.0 - self.noise.epistemic_unknown_prob) {
            // Reveal the oracle's outcome, witness included.
            self.inner.fix_unknown(query)
        } else {
            Ok(FixOutcome::unknown(None))
        }
    }

    fn entails_yes_no(&self, query: &Query) -> Result<BinaryAnswer, BackendError> {
        let exact = self.inner.entails_yes_no(query)?;
        let mut rng = self.stream(query, ProbeKind::Entails);
        Ok(if rng.chance(self.noise.flip_prob) {
            match exact {
                BinaryAnswer::Yes => BinaryAnswer::No,
                BinaryAnswer::No => BinaryAnswer::Yes,
            }
        } else {
            exact
        })
    }

    fn adjudicate(&self, query: &Query, y_h: Label, y_neg_h: Label) -> Result<Label, BackendError> {
        let exact = self.inner.adjudicate(query, y_h, y_neg_h)?;
        let mut rng = self.stream(query, ProbeKind::Adjudicate);
        Ok(if rng.chance(self.noise.flip_prob) {
            // Switch to the other consistent assignment.
            if exact == y_h {
                neg_map(y_neg_h)
            } else {
                y_h
            }
        } else {
            exact
        })
    }
}
