//! Cross-module properties: parser round trips, dual-route oracle agreement,
//! noise-model identities, decoder fixpoints, and bootstrap calibration.

use proptest::prelude::*;

use cgdpd_core::classifier::{
    Backend, Hypothesis, Label, NegationStrategy, NoiseModel, NoisyBackend, OracleBackend, Query,
};
use cgdpd_core::dataset::generate_synthetic;
use cgdpd_core::decoder::{decide_cgdpd, decide_single, neg_map, pair_consistent, Stage};
use cgdpd_core::fol::{alpha_eq, constant, negate, parse_formula, render, variable, Formula, Term};
use cgdpd_core::metrics::{paired_bootstrap, PredictionRecord, Statistic};
use cgdpd_core::oracle::{check_consistency, entails, three_way_label, OracleConfig};
use cgdpd_core::reference;

/// Test-local splitmix64 so generation stays deterministic per seed.
struct TestRng(u64);

impl TestRng {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }

    fn chance(&mut self, p: f64) -> bool {
        (self.next() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) < p
    }
}

const CONSTS: [&str; 3] = ["ada", "bo", "cam"];
const PREDS: [(&str, usize); 4] = [("P", 1), ("Q", 1), ("Rel", 2), ("Raining", 0)];

fn gen_term(rng: &mut TestRng, scope: &[String]) -> Term {
    if !scope.is_empty() && rng.chance(0.5) {
        variable(scope[rng.below(scope.len())].clone())
    } else {
        constant(CONSTS[rng.below(CONSTS.len())])
    }
}

/// Random closed formula up to the given depth; binder names are fresh, so
/// no shadowing is generated (the parser's alpha pass is tested separately).
fn gen_formula(rng: &mut TestRng, depth: usize, scope: &mut Vec<String>) -> Formula {
    if depth == 0 || rng.chance(0.3) {
        if rng.chance(0.1) {
            return Formula::Equality(gen_term(rng, scope), gen_term(rng, scope));
        }
        let (pred, arity) = PREDS[rng.below(PREDS.len())];
        let args = (0..arity).map(|_| gen_term(rng, scope)).collect();
        return Formula::Atom {
            predicate: pred.to_string(),
            args,
        };
    }
    match rng.below(8) {
        0 => Formula::not(gen_formula(rng, depth - 1, scope)),
        1 => Formula::and(
            gen_formula(rng, depth - 1, scope),
            gen_formula(rng, depth - 1, scope),
        ),
        2 => Formula::or(
            gen_formula(rng, depth - 1, scope),
            gen_formula(rng, depth - 1, scope),
        ),
        3 => Formula::xor(
            gen_formula(rng, depth - 1, scope),
            gen_formula(rng, depth - 1, scope),
        ),
        4 => Formula::implies(
            gen_formula(rng, depth - 1, scope),
            gen_formula(rng, depth - 1, scope),
        ),
        5 => Formula::iff(
            gen_formula(rng, depth - 1, scope),
            gen_formula(rng, depth - 1, scope),
        ),
        q => {
            let var = format!("x{}", scope.len());
            scope.push(var.clone());
            let body = gen_formula(rng, depth - 1, scope);
            scope.pop();
            if q == 6 {
                Formula::forall(var, body)
            } else {
                Formula::exists(var, body)
            }
        }
    }
}

proptest! {
    /// Rendering then reparsing reproduces the formula up to alpha-renaming.
    #[test]
    fn render_parse_round_trip(seed: u64) {
        let mut rng = TestRng(seed);
        let f = gen_formula(&mut rng, 6, &mut Vec::new());
        let text = render(&f);
        let reparsed = parse_formula(&text)
            .unwrap_or_else(|e| panic!("render of {f:?} failed to reparse: {e}\n{text}"));
        prop_assert!(alpha_eq(&f, &reparsed), "round trip changed {text}");
    }

    /// negate ∘ negate is the identity. A root that is already a redundant
    /// double negation gets collapsed by the first application, so the
    /// property is stated over formulas without one (parse output of real
    /// data never carries redundant leading ¬¬).
    #[test]
    fn negation_involution(seed: u64) {
        let mut rng = TestRng(seed);
        let mut f = gen_formula(&mut rng, 5, &mut Vec::new());
        while let Formula::Not(inner) = &f {
            if let Formula::Not(core) = &**inner {
                f = (**core).clone();
            } else {
                break;
            }
        }
        prop_assert_eq!(negate(&negate(&f)), f);
    }

    /// The parser never panics: every input produces a formula or a
    /// diagnostic whose position stays within the text.
    #[test]
    fn parser_is_total(text in ".{0,80}") {
        match parse_formula(&text) {
            Ok(_) => {}
            Err(diag) => prop_assert!(diag.position <= text.len()),
        }
    }
}

#[test]
fn oracle_agrees_with_reference_on_generated_instances() {
    for seed in 0..300u64 {
        let instance = reference::random_instance(seed);
        let cfg = OracleConfig::default();
        let fast = three_way_label(&instance.premises, &instance.hypothesis, &cfg);
        let slow = reference::three_way_label(&instance.premises, &instance.hypothesis, true);
        match (fast, slow) {
            (Ok(a), Ok(b)) => assert_eq!(a, b, "instance {seed} disagrees"),
            (Err(cgdpd_core::oracle::OracleError::InconsistentPremises), Err(_)) => {}
            (a, b) => panic!("instance {seed}: oracle {a:?}, reference {b:?}"),
        }
    }
}

#[test]
fn entailment_routes_agree() {
    for seed in 300..500u64 {
        let instance = reference::random_instance(seed);
        let cfg = OracleConfig::default();
        let fast = entails(&instance.premises, &instance.hypothesis, &cfg)
            .unwrap()
            .is_yes();
        let slow = reference::entails(&instance.premises, &instance.hypothesis, true).unwrap();
        assert_eq!(fast, slow, "instance {seed}");
    }
}

#[test]
fn negation_label_flip_holds_semantically() {
    let cfg = OracleConfig::default();
    for seed in 0..300u64 {
        let instance = reference::random_instance(seed);
        let direct = three_way_label(&instance.premises, &instance.hypothesis, &cfg).unwrap();
        let negated =
            three_way_label(&instance.premises, &negate(&instance.hypothesis), &cfg).unwrap();
        assert_eq!(negated, neg_map(direct), "instance {seed}");
    }
}

#[test]
fn entailment_sides_are_mutually_exclusive() {
    let cfg = OracleConfig::default();
    for seed in 500..700u64 {
        let instance = reference::random_instance(seed);
        let h = entails(&instance.premises, &instance.hypothesis, &cfg)
            .unwrap()
            .is_yes();
        let neg_h = entails(&instance.premises, &negate(&instance.hypothesis), &cfg)
            .unwrap()
            .is_yes();
        assert!(
            !(h && neg_h),
            "instance {seed}: both sides entailed by a consistent set"
        );
    }
}

#[test]
fn entailment_is_monotone_under_premise_extension() {
    let cfg = OracleConfig::default();
    let mut checked = 0;
    for seed in 0..400u64 {
        let instance = reference::random_instance(seed);
        if !entails(&instance.premises, &instance.hypothesis, &cfg)
            .unwrap()
            .is_yes()
        {
            continue;
        }
        let extra = reference::random_extra_formula(seed, &instance);
        let mut extended = instance.premises.clone();
        extended.push(extra);
        if !check_consistency(&extended, &cfg).unwrap() {
            continue;
        }
        assert!(
            entails(&extended, &instance.hypothesis, &cfg)
                .unwrap()
                .is_yes(),
            "instance {seed}: entailment lost after adding a premise"
        );
        checked += 1;
    }
    assert!(
        checked > 20,
        "monotonicity property exercised only {checked} times"
    );
}

#[test]
fn zero_noise_backend_is_extensionally_the_oracle() {
    let oracle = OracleBackend::default();
    let noisy = NoisyBackend::new(OracleBackend::default(), NoiseModel::new(0.0, 0.0, 0.0, 99));
    for seed in 0..100u64 {
        let instance = reference::random_instance(seed);
        let texts: Vec<String> = instance.premises.iter().map(render).collect();
        let positive =
            Hypothesis::positive(instance.hypothesis.clone(), render(&instance.hypothesis));
        let negated = NegationStrategy::FormulaLevel.negate_hypothesis(&positive);
        for hypothesis in [&positive, &negated] {
            let id = format!("zn-{seed}");
            let query = Query {
                example_id: &id,
                premises: &instance.premises,
                premise_texts: &texts,
                hypothesis,
            };
            assert_eq!(
                noisy.classify(&query).unwrap(),
                oracle.classify(&query).unwrap()
            );
            assert_eq!(
                noisy.fix_unknown(&query).unwrap(),
                oracle.fix_unknown(&query).unwrap()
            );
            assert_eq!(
                noisy.entails_yes_no(&query).unwrap(),
                oracle.entails_yes_no(&query).unwrap()
            );
            for pair in [(Label::True, Label::True), (Label::False, Label::False)] {
                assert_eq!(
                    noisy.adjudicate(&query, pair.0, pair.1).unwrap(),
                    oracle.adjudicate(&query, pair.0, pair.1).unwrap()
                );
            }
        }
    }
}

#[test]
fn fix_outcome_invariant_holds_across_backends() {
    let oracle = OracleBackend::default();
    let noisy = NoisyBackend::new(OracleBackend::default(), NoiseModel::new(0.4, 0.1, 0.2, 3));
    for seed in 0..80u64 {
        let instance = reference::random_instance(seed);
        let texts: Vec<String> = instance.premises.iter().map(render).collect();
        let h = Hypothesis::positive(instance.hypothesis.clone(), render(&instance.hypothesis));
        let id = format!("fx-{seed}");
        let query = Query {
            example_id: &id,
            premises: &instance.premises,
            premise_texts: &texts,
            hypothesis: &h,
        };
        assert!(oracle.fix_unknown(&query).unwrap().invariant_holds());
        assert!(noisy.fix_unknown(&query).unwrap().invariant_holds());
    }
}

#[test]
fn decoder_fixpoint_and_trace_invariants_on_oracle_backend() {
    let backend = OracleBackend::default();
    let examples = generate_synthetic(120, 0.5, 20250808).unwrap();
    for ex in &examples {
        let decision = decide_cgdpd(&backend, NegationStrategy::FormulaLevel, ex).unwrap();
        let single = decide_single(&backend, ex).unwrap();
        assert_eq!(decision.label, ex.gold);
        assert_eq!(single.label, ex.gold);
        // Final decision always implies a negation-consistent pair.
        assert!(pair_consistent(decision.label, neg_map(decision.label)));
        // Trace invariants.
        let t = &decision.trace;
        assert!((2..=6).contains(&t.calls));
        if t.stage == Stage::ConsistentPair {
            assert_eq!(t.calls, 2);
            assert!(t.fix_h.is_none() && t.fix_neg_h.is_none());
            assert!(t.probe_results.is_none());
            assert!(!t.adjudicated);
        }
        if t.probe_results.is_some() {
            assert_eq!(t.fix_h.as_ref().map(|f| f.label), Some(Label::Unknown));
            assert_eq!(t.fix_neg_h.as_ref().map(|f| f.label), Some(Label::Unknown));
        }
    }
}

#[test]
fn noisy_decoding_is_deterministic_across_call_order() {
    let backend = NoisyBackend::new(OracleBackend::default(), NoiseModel::new(0.5, 0.1, 0.2, 42));
    let examples = generate_synthetic(50, 0.5, 7).unwrap();
    let forward: Vec<Label> = examples
        .iter()
        .map(|ex| {
            decide_cgdpd(&backend, NegationStrategy::FormulaLevel, ex)
                .unwrap()
                .label
        })
        .collect();
    let mut reversed: Vec<(usize, Label)> = examples
        .iter()
        .enumerate()
        .rev()
        .map(|(i, ex)| {
            (
                i,
                decide_cgdpd(&backend, NegationStrategy::FormulaLevel, ex)
                    .unwrap()
                    .label,
            )
        })
        .collect();
    reversed.sort_by_key(|(i, _)| *i);
    let reversed: Vec<Label> = reversed.into_iter().map(|(_, l)| l).collect();
    assert_eq!(forward, reversed);
}

/// On synthetic runs differing by independent coin flips with a known edge,
/// the 95% bootstrap interval should contain the true edge in the vast
/// majority of trials.
#[test]
fn bootstrap_interval_is_roughly_calibrated() {
    let n = 300;
    let (p_a, p_b) = (0.60, 0.75);
    let true_edge = p_b - p_a;
    let mut covered = 0;
    let trials = 200;
    for trial in 0..trials {
        let mut rng = TestRng(0xB007 + trial as u64);
        let make = |rng: &mut TestRng, p: f64| -> Vec<PredictionRecord> {
            (0..n)
                .map(|i| PredictionRecord {
                    example_id: format!("e{i}"),
                    gold: Label::True,
                    predicted: if rng.chance(p) {
                        Label::True
                    } else {
                        Label::False
                    },
                    calls: 1,
                    stage: Stage::SingleShot,
                    changed_vs_baseline: None,
                })
                .collect()
        };
        let run_a = make(&mut rng, p_a);
        let run_b = make(&mut rng, p_b);
        let ci = paired_bootstrap(&run_a, &run_b, Statistic::Accuracy, 400, trial as u64).unwrap();
        assert!(ci.lo <= ci.hi);
        if ci.lo <= true_edge && true_edge <= ci.hi {
            covered += 1;
        }
    }
    assert!(
        covered >= trials * 9 / 10,
        "95% interval covered the true edge in only {covered}/{trials} trials"
    );
}
