//! Independent brute-force model checker, used to cross-validate the
//! grounding pipeline in [`crate::oracle`].
//!
//! Instead of propositionalizing, this path enumerates every interpretation
//! of the full Herbrand base (all predicate/argument-tuple combinations over
//! the domain) and evaluates each first-order formula recursively per
//! assignment. It shares no code with the oracle, so a bug in one cannot
//! hide in the other.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::classifier::Label;
use crate::fol::{Formula, Term};
use crate::rng::{mix, SplitMix64};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReferenceError {
    #[error("premise set is unsatisfiable")]
    Inconsistent,
    #[error("Herbrand base too large for per-assignment evaluation: {0} atoms")]
    TooLarge(usize),
    #[error("formula is not closed: unbound variable `{0}`")]
    Open(String),
}

/// Hard cap on the enumerated Herbrand base; the cross-check generator stays
/// well under it.
const MAX_BASE: usize = 24;

struct Universe {
    domain: Vec<String>,
    index: HashMap<(String, Vec<String>), usize>,
    unique_names: bool,
    size: usize,
}

impl Universe {
    fn build(formulas: &[&Formula], unique_names: bool) -> Result<Self, ReferenceError> {
        let mut consts = BTreeSet::new();
        let mut preds: BTreeMap<(String, usize), ()> = BTreeMap::new();
        for f in formulas {
            scan(f, &mut consts, &mut preds);
        }
        let mut domain: Vec<String> = consts.into_iter().collect();
        if domain.is_empty() {
            domain.push("c0".to_string());
        }
        let mut index = HashMap::new();
        let mut size = 0;
        for (name, arity) in preds.keys() {
            for tuple in tuples(&domain, *arity) {
                index.insert((name.clone(), tuple), size);
                size += 1;
            }
        }
        if !unique_names {
            // Uninterpreted equality: one atom per unordered domain pair.
            for i in 0..domain.len() {
                for j in i..domain.len() {
                    index.insert(
                        ("=".to_string(), vec![domain[i].clone(), domain[j].clone()]),
                        size,
                    );
                    size += 1;
                }
            }
        }
        if size > MAX_BASE {
            return Err(ReferenceError::TooLarge(size));
        }
        Ok(Self {
            domain,
            index,
            unique_names,
            size,
        })
    }

    fn atom_truth(
        &self,
        pred: &str,
        args: Vec<String>,
        interp: u64,
    ) -> Result<bool, ReferenceError> {
        let i = self.index[&(pred.to_string(), args)];
        Ok(interp & (1 << i) != 0)
    }

    fn eval(
        &self,
        f: &Formula,
        interp: u64,
        env: &mut Vec<(String, String)>,
    ) -> Result<bool, ReferenceError> {
        match f {
            Formula::Atom { predicate, args } => {
                let resolved = args
                    .iter()
                    .map(|t| resolve(t, env))
                    .collect::<Result<Vec<_>, _>>()?;
                self.atom_truth(predicate, resolved, interp)
            }
            Formula::Equality(l, r) => {
                let a = resolve(l, env)?;
                let b = resolve(r, env)?;
                if self.unique_names {
                    Ok(a == b)
                } else {
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    self.atom_truth("=", vec![lo, hi], interp)
                }
            }
            Formula::Not(g) => Ok(!self.eval(g, interp, env)?),
            Formula::And(a, b) => Ok(self.eval(a, interp, env)? && self.eval(b, interp, env)?),
            Formula::Or(a, b) => Ok(self.eval(a, interp, env)? || self.eval(b, interp, env)?),
            Formula::Xor(a, b) => Ok(self.eval(a, interp, env)? != self.eval(b, interp, env)?),
            Formula::Implies(a, b) => Ok(!self.eval(a, interp, env)? || self.eval(b, interp, env)?),
            Formula::Iff(a, b) => Ok(self.eval(a, interp, env)? == self.eval(b, interp, env)?),
            Formula::Forall(v, body) => {
                for elem in &self.domain {
                    env.push((v.clone(), elem.clone()));
                    let ok = self.eval(body, interp, env);
                    env.pop();
                    if !ok? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Exists(v, body) => {
                for elem in &self.domain {
                    env.push((v.clone(), elem.clone()));
                    let ok = self.eval(body, interp, env);
                    env.pop();
                    if ok? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }
}

fn resolve(t: &Term, env: &[(String, String)]) -> Result<String, ReferenceError> {
    match t {
        Term::Constant(n) => Ok(n.clone()),
        Term::Variable(n) => env
            .iter()
            .rev()
            .find(|(v, _)| v == n)
            .map(|(_, value)| value.clone())
            .ok_or_else(|| ReferenceError::Open(n.clone())),
    }
}

fn scan(f: &Formula, consts: &mut BTreeSet<String>, preds: &mut BTreeMap<(String, usize), ()>) {
    match f {
        Formula::Atom { predicate, args } => {
            preds.insert((predicate.clone(), args.len()), ());
            for t in args {
                if let Term::Constant(n) = t {
                    consts.insert(n.clone());
                }
            }
        }
        Formula::Equality(l, r) => {
            for t in [l, r] {
                if let Term::Constant(n) = t {
                    consts.insert(n.clone());
                }
            }
        }
        Formula::Not(g) => scan(g, consts, preds),
        Formula::And(a, b)
        | Formula::Or(a, b)
        | Formula::Xor(a, b)
        | Formula::Implies(a, b)
        | Formula::Iff(a, b) => {
            scan(a, consts, preds);
            scan(b, consts, preds);
        }
        Formula::Forall(_, body) | Formula::Exists(_, body) => scan(body, consts, preds),
    }
}

fn tuples(domain: &[String], arity: usize) -> Vec<Vec<String>> {
    let mut out = vec![vec![]];
    for _ in 0..arity {
        let mut next = Vec::with_capacity(out.len() * domain.len());
        for prefix in &out {
            for d in domain {
                let mut t = prefix.clone();
                t.push(d.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Does `S ⊨ phi` under per-assignment evaluation?
pub fn entails(
    premises: &[Formula],
    phi: &Formula,
    unique_names: bool,
) -> Result<bool, ReferenceError> {
    let mut all: Vec<&Formula> = premises.iter().collect();
    all.push(phi);
    let universe = Universe::build(&all, unique_names)?;
    for interp in 0..(1u64 << universe.size) {
        let premises_hold = premises
            .iter()
            .map(|p| universe.eval(p, interp, &mut Vec::new()))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .all(|b| b);
        if premises_hold && !universe.eval(phi, interp, &mut Vec::new())? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Is the premise set satisfiable?
pub fn consistent(premises: &[Formula], unique_names: bool) -> Result<bool, ReferenceError> {
    let all: Vec<&Formula> = premises.iter().collect();
    let universe = Universe::build(&all, unique_names)?;
    for interp in 0..(1u64 << universe.size) {
        let ok = premises
            .iter()
            .map(|p| universe.eval(p, interp, &mut Vec::new()))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .all(|b| b);
        if ok {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Three-way label by direct model enumeration. Independent of
/// [`crate::oracle::three_way_label`] end to end.
pub fn three_way_label(
    premises: &[Formula],
    hypothesis: &Formula,
    unique_names: bool,
) -> Result<Label, ReferenceError> {
    let mut all: Vec<&Formula> = premises.iter().collect();
    all.push(hypothesis);
    let universe = Universe::build(&all, unique_names)?;
    let mut premise_model_seen = false;
    let mut with_h = false;
    let mut without_h = false;
    for interp in 0..(1u64 << universe.size) {
        let premises_hold = premises
            .iter()
            .map(|p| universe.eval(p, interp, &mut Vec::new()))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .all(|b| b);
        if !premises_hold {
            continue;
        }
        premise_model_seen = true;
        if universe.eval(hypothesis, interp, &mut Vec::new())? {
            with_h = true;
        } else {
            without_h = true;
        }
        if with_h && without_h {
            return Ok(Label::Unknown);
        }
    }
    if !premise_model_seen {
        return Err(ReferenceError::Inconsistent);
    }
    Ok(if !without_h {
        Label::True
    } else {
        Label::False
    })
}

/// A generated cross-check instance: consistent premises over a small
/// vocabulary whose full Herbrand base stays at or below 12 atoms.
#[derive(Debug, Clone)]
pub struct Instance {
    pub premises: Vec<Formula>,
    pub hypothesis: Formula,
}

#[derive(Debug, Clone)]
struct Vocab {
    predicates: Vec<(String, usize)>,
    constants: Vec<String>,
}

impl Vocab {
    fn base_size(&self) -> usize {
        self.predicates
            .iter()
            .map(|(_, arity)| self.constants.len().pow(*arity as u32))
            .sum()
    }
}

fn random_vocab(rng: &mut SplitMix64) -> Vocab {
    let names = ["P", "Q", "R", "S"];
    loop {
        let n_consts = 1 + rng.gen_range(2);
        let n_preds = 2 + rng.gen_range(3);
        let vocab = Vocab {
            predicates: names
                .iter()
                .take(n_preds)
                .map(|n| (n.to_string(), rng.gen_range(3)))
                .collect(),
            constants: ["a", "b"]
                .iter()
                .take(n_consts)
                .map(|s| s.to_string())
                .collect(),
        };
        if vocab.base_size() <= 12 {
            return vocab;
        }
    }
}

fn random_term(rng: &mut SplitMix64, vocab: &Vocab, scope: &[String]) -> Term {
    if !scope.is_empty() && rng.chance(0.5) {
        Term::Variable(scope[rng.gen_range(scope.len())].clone())
    } else {
        Term::Constant(vocab.constants[rng.gen_range(vocab.constants.len())].clone())
    }
}

fn random_formula(
    rng: &mut SplitMix64,
    vocab: &Vocab,
    depth: usize,
    scope: &mut Vec<String>,
) -> Formula {
    let leaf = depth == 0 || rng.chance(0.35);
    if leaf {
        if vocab.constants.len() > 1 && rng.chance(0.08) {
            return Formula::Equality(
                random_term(rng, vocab, scope),
                random_term(rng, vocab, scope),
            );
        }
        let (pred, arity) = vocab.predicates[rng.gen_range(vocab.predicates.len())].clone();
        let args = (0..arity).map(|_| random_term(rng, vocab, scope)).collect();
        return Formula::Atom {
            predicate: pred,
            args,
        };
    }
    match rng.gen_range(8) {
        0 => Formula::not(random_formula(rng, vocab, depth - 1, scope)),
        1 => Formula::and(
            random_formula(rng, vocab, depth - 1, scope),
            random_formula(rng, vocab, depth - 1, scope),
        ),
        2 => Formula::or(
            random_formula(rng, vocab, depth - 1, scope),
            random_formula(rng, vocab, depth - 1, scope),
        ),
        3 => Formula::xor(
            random_formula(rng, vocab, depth - 1, scope),
            random_formula(rng, vocab, depth - 1, scope),
        ),
        4 => Formula::implies(
            random_formula(rng, vocab, depth - 1, scope),
            random_formula(rng, vocab, depth - 1, scope),
        ),
        5 => Formula::iff(
            random_formula(rng, vocab, depth - 1, scope),
            random_formula(rng, vocab, depth - 1, scope),
        ),
        q => {
            let var = format!("x{}", scope.len());
            scope.push(var.clone());
            let body = random_formula(rng, vocab, depth - 1, scope);
            scope.pop();
            if q == 6 {
                Formula::forall(var, body)
            } else {
                Formula::exists(var, body)
            }
        }
    }
}

/// Deterministically generates a cross-check instance for `seed`. Premises
/// are rejection-sampled until they are satisfiable over the instance's full
/// domain, hypothesis constants included (unique-names equality makes
/// satisfiability domain-dependent), so the instance always carries a
/// three-way label. The Herbrand base is at most 12 atoms.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = SplitMix64::new(mix(seed, 0x1457_AB1E));
    let vocab = random_vocab(&mut rng);
    let hypothesis = random_formula(&mut rng, &vocab, 3, &mut Vec::new());
    loop {
        let n = 1 + rng.gen_range(3);
        let premises: Vec<Formula> = (0..n)
            .map(|_| random_formula(&mut rng, &vocab, 3, &mut Vec::new()))
            .collect();
        if three_way_label(&premises, &hypothesis, true).is_ok() {
            return Instance {
                premises,
                hypothesis,
            };
        }
    }
}

/// A further formula over the same vocabulary as `instance`, for
/// premise-extension properties.
pub fn random_extra_formula(seed: u64, instance: &Instance) -> Formula {
    let mut consts = BTreeSet::new();
    let mut preds = BTreeMap::new();
    for f in instance.premises.iter().chain([&instance.hypothesis]) {
        scan(f, &mut consts, &mut preds);
    }
    let vocab = Vocab {
        predicates: preds.into_keys().collect(),
        constants: consts.into_iter().collect(),
    };
    let mut rng = SplitMix64::new(mix(seed, 0xE87A_F00D));
    if vocab.predicates.is_empty() || vocab.constants.is_empty() {
        return instance.hypothesis.clone();
    }
    random_formula(&mut rng, &vocab, 2, &mut Vec::new())
}
