//! Fully scripted backend for decoder tests and exhaustive path enumeration:
//! every probe's answer is fixed up front, keyed by hypothesis polarity.

use std::sync::atomic::{AtomicUsize, Ordering};

use super::{Backend, BackendError, BinaryAnswer, FixOutcome, Label, Polarity, Query};
use crate::decoder::neg_map;

/// Which of the two consistent assignments the scripted adjudicator picks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjudicatePick {
    /// Return `y_H`.
    Direct,
    /// Return `NegMap(y_¬H)`.
    Mapped,
}

#[derive(Debug)]
pub struct ScriptedBackend {
    pub y_h: Label,
    pub y_neg_h: Label,
    pub fix_h: Label,
    pub fix_neg_h: Label,
    pub probe_h: BinaryAnswer,
    pub probe_neg_h: BinaryAnswer,
    pub adjudicate_pick: AdjudicatePick,
    classify_count: AtomicUsize,
    fix_count: AtomicUsize,
    probe_count: AtomicUsize,
    adjudicate_count: AtomicUsize,
}

impl ScriptedBackend {
    pub fn new(y_h: Label, y_neg_h: Label) -> Self {
        Self {
            y_h,
            y_neg_h,
            fix_h: Label::Unknown,
            fix_neg_h: Label::Unknown,
            probe_h: BinaryAnswer::No,
            probe_neg_h: BinaryAnswer::No,
            adjudicate_pick: AdjudicatePick::Direct,
            classify_count: AtomicUsize::new(0),
            fix_count: AtomicUsize::new(0),
            probe_count: AtomicUsize::new(0),
            adjudicate_count: AtomicUsize::new(0),
        }
    }

    pub fn with_fixes(mut self, fix_h: Label, fix_neg_h: Label) -> Self {
        self.fix_h = fix_h;
        self.fix_neg_h = fix_neg_h;
        self
    }

    pub fn with_probes(mut self, probe_h: BinaryAnswer, probe_neg_h: BinaryAnswer) -> Self {
        self.probe_h = probe_h;
        self.probe_neg_h = probe_neg_h;
        self
    }

    pub fn with_adjudicate_pick(mut self, pick: AdjudicatePick) -> Self {
        self.adjudicate_pick = pick;
        self
    }

    pub fn counts(&self) -> (usize, usize, usize, usize) {
        (
            self.classify_count.load(Ordering::SeqCst),
            self.fix_count.load(Ordering::SeqCst),
            self.probe_count.load(Ordering::SeqCst),
            self.adjudicate_count.load(Ordering::SeqCst),
        )
    }

    fn by_polarity<T: Copy>(query: &Query, positive: T, negated: T) -> T {
        match query.hypothesis.polarity {
            Polarity::Positive => positive,
            Polarity::Negated => negated,
        }
    }
}

impl Backend for ScriptedBackend {
    fn classify(&self, query: &Query) -> Result<Label, BackendError> {
        self.classify_count.fetch_add(1, Ordering::SeqCst);
        Ok(Self::by_polarity(query, self.y_h, self.y_neg_h))
    }

    fn fix_unknown(&self, query: &Query) -> Result<FixOutcome, BackendError> {
        self.fix_count.fetch_add(1, Ordering::SeqCst);
        let label = Self::by_polarity(query, self.fix_h, self.fix_neg_h);
        Ok(match label {
            Label::Unknown => FixOutcome::unknown(None),
            decisive => FixOutcome::decisive(decisive, "scripted witness"),
        })
    }

    fn entails_yes_no(&self, query: &Query) -> Result<BinaryAnswer, BackendError> {
        self.probe_count.fetch_add(1, Ordering::SeqCst);
        Ok(Self::by_polarity(query, self.probe_h, self.probe_neg_h))
    }

    fn adjudicate(
        &self,
        _query: &Query,
        y_h: Label,
        y_neg_h: Label,
    ) -> Result<Label, BackendError> {
        self.adjudicate_count.fetch_add(1, Ordering::SeqCst);
        Ok(match self.adjudicate_pick {
            AdjudicatePick::Direct => y_h,
            AdjudicatePick::Mapped => neg_map(y_neg_h),
        })
    }
}
