//! Memoizing wrapper for deterministic backends.
//!
//! Keys are (probe kind, canonical premises, hypothesis prompt text), plus
//! the label pair for adjudication. The wrapped backend must be a pure
//! function of those inputs (true for temperature-0 HTTP backends; not true
//! for the noise simulator, whose draws depend on the example id). Cache hits
//! do not change the decoder's call accounting, which counts algorithmic
//! invocations rather than transport requests.

use std::collections::HashMap;
use std::sync::Mutex;

use super::{
    premises_key, Backend, BackendError, BinaryAnswer, FixOutcome, Label, ProbeKind, Query,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    kind: ProbeKind,
    premises: String,
    hypothesis: String,
    labels: Option<(Label, Label)>,
}

#[derive(Debug, Clone)]
enum CachedValue {
    Label(Label),
    Fix(FixOutcome),
    Binary(BinaryAnswer),
}

pub struct CachedBackend {
    inner: Box<dyn Backend>,
    enabled: bool,
    store: Mutex<HashMap<CacheKey, CachedValue>>,
}

impl CachedBackend {
    pub fn new(inner: Box<dyn Backend>) -> Self {
        Self {
            inner,
            enabled: true,
            store: Mutex::new(HashMap::new()),
        }
    }

    /// Pass-through construction; every call reaches the wrapped backend.
    pub fn disabled(inner: Box<dyn Backend>) -> Self {
        Self {
            inner,
            enabled: false,
            store: Mutex::new(HashMap::new()),
        }
    }

    fn key(&self, kind: ProbeKind, query: &Query, labels: Option<(Label, Label)>) -> CacheKey {
        CacheKey {
            kind,
            premises: premises_key(query.premises),
            hypothesis: query.hypothesis.prompt_text.clone(),
            labels,
        }
    }

    fn lookup(&self, key: &CacheKey) -> Option<CachedValue> {
        self.store.lock().unwrap().get(key).cloned()
    }

    fn insert(&self, key: CacheKey, value: CachedValue) {
        // Last write wins; values for a given key are deterministic, so
        // concurrent inserts are benign.
        self.store.lock().unwrap().insert(key, value);
    }
}

impl Backend for CachedBackend {
    fn classify(&self, query: &Query) -> Result<Label, BackendError> {
        if !self.enabled {
            return self.inner.classify(query);
        }
        let key = self.key(ProbeKind::Classify, query, None);
        if let Some(CachedValue::Label(label)) = self.lookup(&key) {
            return Ok(label);
        }
        let label = self.inner.classify(query)?;
        self.insert(key, CachedValue::Label(label));
        Ok(label)
    }

    fn fix_unknown(&self, query: &Query) -> Result<FixOutcome, BackendError> {
        if !self.enabled {
            return self.inner.fix_unknown(query);
        }
        let key = self.key(ProbeKind::FixUnknown, query, None);
        if let Some(CachedValue::Fix(fix)) = self.lookup(&key) {
            return Ok(fix);
        }
        let fix = self.inner.fix_unknown(query)?;
        self.insert(key, CachedValue::Fix(fix.clone()));
        Ok(fix)
    }

    fn entails_yes_no(&self, query: &Query) -> Result<BinaryAnswer, BackendError> {
        if !self.enabled {
            return self.inner.entails_yes_no(query);
        }
        let key = self.key(ProbeKind::Entails, query, None);
        if let Some(CachedValue::Binary(answer)) = self.lookup(&key) {
            return Ok(answer);
        }
        let answer = self.inner.entails_yes_no(query)?;
        self.insert(key, CachedValue::Binary(answer));
        Ok(answer)
    }

    fn adjudicate(&self, query: &Query, y_h: Label, y_neg_h: Label) -> Result<Label, BackendError> {
        if !self.enabled {
            return self.inner.adjudicate(query, y_h, y_neg_h);
        }
        let key = self.key(ProbeKind::Adjudicate, query, Some((y_h, y_neg_h)));
        if let Some(CachedValue::Label(label)) = self.lookup(&key) {
            return Ok(label);
        }
        let label = self.inner.adjudicate(query, y_h, y_neg_h)?;
        self.insert(key, CachedValue::Label(label));
        Ok(label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{Hypothesis, NegationStrategy};
    use crate::fol::{parse_formula, Formula};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Counts upstream invocations and answers deterministically.
    struct Counting {
        classify_calls: Arc<AtomicUsize>,
    }

    impl Backend for Counting {
        fn classify(&self, _query: &Query) -> Result<Label, BackendError> {
            self.classify_calls.fetch_add(1, Ordering::SeqCst);
            Ok(Label::True)
        }

        fn fix_unknown(&self, _query: &Query) -> Result<FixOutcome, BackendError> {
            Ok(FixOutcome::unknown(None))
        }

        fn entails_yes_no(&self, _query: &Query) -> Result<BinaryAnswer, BackendError> {
            Ok(BinaryAnswer::No)
        }

        fn adjudicate(&self, _q: &Query, y_h: Label, _y: Label) -> Result<Label, BackendError> {
            Ok(y_h)
        }
    }

    struct Fixture {
        premises: Vec<Formula>,
        texts: Vec<String>,
        hypothesis: Hypothesis,
    }

    impl Fixture {
        fn new() -> Self {
            Self {
                premises: vec![parse_formula("P(a)").unwrap()],
                texts: vec!["P(a)".to_string()],
                hypothesis: Hypothesis::positive(parse_formula("Q(a)").unwrap(), "Q(a)"),
            }
        }

        fn query<'a>(&'a self, h: &'a Hypothesis) -> Query<'a> {
            Query {
                example_id: "cache-test",
                premises: &self.premises,
                premise_texts: &self.texts,
                hypothesis: h,
            }
        }
    }

    fn counting() -> (Arc<AtomicUsize>, Box<dyn Backend>) {
        let calls = Arc::new(AtomicUsize::new(0));
        (
            calls.clone(),
            Box::new(Counting {
                classify_calls: calls,
            }),
        )
    }

    #[test]
    fn repeated_calls_hit_cache() {
        let (calls, inner) = counting();
        let cached = CachedBackend::new(inner);
        let fx = Fixture::new();
        let q = fx.query(&fx.hypothesis);
        cached.classify(&q).unwrap();
        cached.classify(&q).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn negated_hypothesis_is_a_different_key() {
        let (calls, inner) = counting();
        let cached = CachedBackend::new(inner);
        let fx = Fixture::new();
        let negated = NegationStrategy::FormulaLevel.negate_hypothesis(&fx.hypothesis);
        cached.classify(&fx.query(&fx.hypothesis)).unwrap();
        cached.classify(&fx.query(&negated)).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn disabled_cache_passes_through() {
        let (calls, inner) = counting();
        let cached = CachedBackend::disabled(inner);
        let fx = Fixture::new();
        let q = fx.query(&fx.hypothesis);
        cached.classify(&q).unwrap();
        cached.classify(&q).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 2);
    }
}
