//! Exact three-way labeling for function-free FOL over a finite Herbrand
//! domain.
//!
//! Quantifiers are expanded over the constants occurring in the problem,
//! reducing every formula to a propositional matrix over ground atoms;
//! entailment is then decided by exhausting all `2^N` truth assignments.
//! The configuration caps make the worst case explicit.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::classifier::Label;
use crate::fol::{constants, Formula, Term};

/// Budget and semantics knobs for grounding and enumeration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Distinct constant names denote distinct individuals; fixes the truth
    /// of every ground equality.
    pub unique_names: bool,
    pub max_ground_atoms: usize,
    pub max_domain_size: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            unique_names: true,
            max_ground_atoms: 20,
            max_domain_size: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("{what} budget exceeded: {actual} > limit {limit}")]
    BudgetExceeded {
        what: &'static str,
        actual: usize,
        limit: usize,
    },
    #[error("formula cannot be grounded: {0}")]
    NonGroundable(String),
    #[error("premise set is unsatisfiable")]
    InconsistentPremises,
}

/// Binary entailment verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntailmentVerdict {
    Yes,
    No,
}

impl EntailmentVerdict {
    pub fn is_yes(self) -> bool {
        matches!(self, EntailmentVerdict::Yes)
    }
}

/// Propositional formula over ground-atom indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prop {
    Const(bool),
    Var(usize),
    Not(Box<Prop>),
    And(Box<Prop>, Box<Prop>),
    Or(Box<Prop>, Box<Prop>),
    Xor(Box<Prop>, Box<Prop>),
    Implies(Box<Prop>, Box<Prop>),
    Iff(Box<Prop>, Box<Prop>),
}

/// The propositionalized problem: ground atom identities plus the premise
/// and hypothesis matrices over their indices.
#[derive(Debug, Clone)]
pub struct GroundProblem {
    pub atoms: Vec<String>,
    pub premise_matrix: Prop,
    pub hypothesis_matrix: Prop,
}

impl GroundProblem {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }
}

/// Expands quantifiers over the constants of the problem and replaces ground
/// equalities according to `unique_names`. Atom indices are assigned in first
/// encounter order (premises first, then the hypothesis).
pub fn ground(
    premises: &[Formula],
    hypothesis: &Formula,
    cfg: &OracleConfig,
) -> Result<GroundProblem, OracleError> {
    let mut grounder = Grounder::new(premises, Some(hypothesis), cfg)?;
    let premise_matrix = grounder.ground_all(premises)?;
    let hypothesis_matrix = grounder.ground_formula(hypothesis, &mut Vec::new())?;
    Ok(GroundProblem {
        atoms: grounder.atoms,
        premise_matrix,
        hypothesis_matrix,
    })
}

/// Yes iff every assignment satisfying all premises also satisfies `phi`.
pub fn entails(
    premises: &[Formula],
    phi: &Formula,
    cfg: &OracleConfig,
) -> Result<EntailmentVerdict, OracleError> {
    let gp = ground(premises, phi, cfg)?;
    let n = checked_width(&gp)?;
    for assignment in 0..(1u64 << n) {
        if eval(&gp.premise_matrix, assignment) && !eval(&gp.hypothesis_matrix, assignment) {
            return Ok(EntailmentVerdict::No);
        }
    }
    Ok(EntailmentVerdict::Yes)
}

/// True iff `S ⊨ H`; False iff `S ⊨ ¬H`; Unknown otherwise. Errors out on an
/// unsatisfiable premise set instead of labeling (that is a data problem, not
/// a third label).
pub fn three_way_label(
    premises: &[Formula],
    hypothesis: &Formula,
    cfg: &OracleConfig,
) -> Result<Label, OracleError> {
    let gp = ground(premises, hypothesis, cfg)?;
    let n = checked_width(&gp)?;
    let mut premise_model_seen = false;
    let mut model_with_h = false;
    let mut model_without_h = false;
    for assignment in 0..(1u64 << n) {
        if !eval(&gp.premise_matrix, assignment) {
            continue;
        }
        premise_model_seen = true;
        if eval(&gp.hypothesis_matrix, assignment) {
            model_with_h = true;
        } else {
            model_without_h = true;
        }
        if model_with_h && model_without_h {
            return Ok(Label::Unknown);
        }
    }
    if !premise_model_seen {
        return Err(OracleError::InconsistentPremises);
    }
    if !model_without_h {
        Ok(Label::True)
    } else {
        // No premise model satisfies H, so S ⊨ ¬H.
        Ok(Label::False)
    }
}

/// True iff the premise set is satisfiable within budget.
pub fn check_consistency(premises: &[Formula], cfg: &OracleConfig) -> Result<bool, OracleError> {
    let mut grounder = Grounder::new(premises, None, cfg)?;
    let matrix = grounder.ground_all(premises)?;
    let n = enumerable_width(grounder.atoms.len())?;
    Ok((0..(1u64 << n)).any(|assignment| eval(&matrix, assignment)))
}

fn checked_width(gp: &GroundProblem) -> Result<usize, OracleError> {
    enumerable_width(gp.atom_count())
}

// u64 assignment masks cap enumeration at 62 atoms regardless of the
// configured budget.
fn enumerable_width(n: usize) -> Result<usize, OracleError> {
    if n >= 63 {
        return Err(OracleError::BudgetExceeded {
            what: "ground atom",
            actual: n,
            limit: 62,
        });
    }
    Ok(n)
}

fn eval(p: &Prop, assignment: u64) -> bool {
    match p {
        Prop::Const(b) => *b,
        Prop::Var(i) => assignment & (1 << i) != 0,
        Prop::Not(g) => !eval(g, assignment),
        Prop::And(a, b) => eval(a, assignment) && eval(b, assignment),
        Prop::Or(a, b) => eval(a, assignment) || eval(b, assignment),
        Prop::Xor(a, b) => eval(a, assignment) != eval(b, assignment),
        Prop::Implies(a, b) => !eval(a, assignment) || eval(b, assignment),
        Prop::Iff(a, b) => eval(a, assignment) == eval(b, assignment),
    }
}

struct Grounder<'a> {
    cfg: &'a OracleConfig,
    domain: Vec<String>,
    atoms: Vec<String>,
    index: HashMap<String, usize>,
}

impl<'a> Grounder<'a> {
    fn new(
        premises: &[Formula],
        hypothesis: Option<&Formula>,
        cfg: &'a OracleConfig,
    ) -> Result<Self, OracleError> {
        let mut all: Vec<Formula> = premises.to_vec();
        if let Some(h) = hypothesis {
            all.push(h.clone());
        }
        let mut domain: Vec<String> = constants(&all).into_iter().collect();
        if domain.is_empty() {
            // FOL semantics requires a non-empty domain.
            domain.push("c0".to_string());
        }
        if domain.len() > cfg.max_domain_size {
            return Err(OracleError::BudgetExceeded {
                what: "domain",
                actual: domain.len(),
                limit: cfg.max_domain_size,
            });
        }
        Ok(Self {
            cfg,
            domain,
            atoms: Vec::new(),
            index: HashMap::new(),
        })
    }

    fn ground_all(&mut self, formulas: &[Formula]) -> Result<Prop, OracleError> {
        let mut props = Vec::with_capacity(formulas.len());
        for f in formulas {
            props.push(self.ground_formula(f, &mut Vec::new())?);
        }
        Ok(props
            .into_iter()
            .reduce(|a, b| Prop::And(Box::new(a), Box::new(b)))
            .unwrap_or(Prop::Const(true)))
    }

    fn ground_formula(
        &mut self,
        f: &Formula,
        env: &mut Vec<(String, String)>,
    ) -> Result<Prop, OracleError> {
        match f {
            Formula::Atom { predicate, args } => {
                let mut key = predicate.clone();
                if !args.is_empty() {
                    key.push('(');
                    for (i, t) in args.iter().enumerate() {
                        if i > 0 {
                            key.push_str(", ");
                        }
                        key.push_str(&self.resolve(t, env)?);
                    }
                    key.push(')');
                }
                Ok(Prop::Var(self.intern(key)?))
            }
            Formula::Equality(l, r) => {
                let a = self.resolve(l, env)?;
                let b = self.resolve(r, env)?;
                if self.cfg.unique_names {
                    Ok(Prop::Const(a == b))
                } else {
                    // Uninterpreted equality atom; operands sorted so `a = b`
                    // and `b = a` share one atom.
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    Ok(Prop::Var(self.intern(format!("({lo} = {hi})"))?))
                }
            }
            Formula::Not(g) => Ok(Prop::Not(Box::new(self.ground_formula(g, env)?))),
            Formula::And(a, b) => Ok(Prop::And(
                Box::new(self.ground_formula(a, env)?),
                Box::new(self.ground_formula(b, env)?),
            )),
            Formula::Or(a, b) => Ok(Prop::Or(
                Box::new(self.ground_formula(a, env)?),
                Box::new(self.ground_formula(b, env)?),
            )),
            Formula::Xor(a, b) => Ok(Prop::Xor(
                Box::new(self.ground_formula(a, env)?),
                Box::new(self.ground_formula(b, env)?),
            )),
            Formula::Implies(a, b) => Ok(Prop::Implies(
                Box::new(self.ground_formula(a, env)?),
                Box::new(self.ground_formula(b, env)?),
            )),
            Formula::Iff(a, b) => Ok(Prop::Iff(
                Box::new(self.ground_formula(a, env)?),
                Box::new(self.ground_formula(b, env)?),
            )),
            Formula::Forall(v, body) => self.expand_quantifier(v, body, env, true),
            Formula::Exists(v, body) => self.expand_quantifier(v, body, env, false),
        }
    }

    fn expand_quantifier(
        &mut self,
        var: &str,
        body: &Formula,
        env: &mut Vec<(String, String)>,
        universal: bool,
    ) -> Result<Prop, OracleError> {
        let mut parts = Vec::with_capacity(self.domain.len());
        for elem in self.domain.clone() {
            env.push((var.to_string(), elem));
            let part = self.ground_formula(body, env);
            env.pop();
            parts.push(part?);
        }
        let combined = parts.into_iter().reduce(|a, b| {
            if universal {
                Prop::And(Box::new(a), Box::new(b))
            } else {
                Prop::Or(Box::new(a), Box::new(b))
            }
        });
        Ok(combined.unwrap_or(Prop::Const(universal)))
    }

    fn resolve(&self, t: &Term, env: &[(String, String)]) -> Result<String, OracleError> {
        match t {
            Term::Constant(name) => Ok(name.clone()),
            Term::Variable(name) => env
                .iter()
                .rev()
                .find(|(v, _)| v == name)
                .map(|(_, value)| value.clone())
                .ok_or_else(|| OracleError::NonGroundable(format!("unbound variable `{name}`"))),
        }
    }

    fn intern(&mut self, key: String) -> Result<usize, OracleError> {
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        if self.atoms.len() >= self.cfg.max_ground_atoms {
            return Err(OracleError::BudgetExceeded {
                what: "ground atom",
                actual: self.atoms.len() + 1,
                limit: self.cfg.max_ground_atoms,
            });
        }
        let i = self.atoms.len();
        self.atoms.push(key.clone());
        self.index.insert(key, i);
        Ok(i)
    }
}
