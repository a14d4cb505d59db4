//! Function-free first-order logic: AST, parser, canonical renderer, and
//! mechanical negation.
//!
//! The grammar accepts both Unicode and ASCII operator spellings with
//! precedence `¬ > ∧ > ∨ > ⊕ > → > ↔` (`→`/`↔` right-associative, the rest
//! left-associative). Quantifiers bind exactly their parenthesized body.
//! Identifiers are `[A-Za-z_][A-Za-z0-9_]*`; an identifier in term position is
//! a variable iff an enclosing quantifier binds it, otherwise a constant.
//! Occurrences of quantified names outside their binder's scope, and unbound
//! occurrences of the conventional variable names (`u`–`z`, optionally with a
//! numeric suffix), are rejected as free variables.

mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

pub use parser::parse_formula;

/// A term: either a constant (a named individual) or a quantifier-bound
/// variable. Function symbols are not representable; the parser rejects them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Constant(String),
    Variable(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Constant(n) | Term::Variable(n) => n,
        }
    }
}

/// AST for function-free first-order formulas.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom { predicate: String, args: Vec<Term> },
    Equality(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Xor(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

/// Parse failure: a byte offset into the input and a message.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseDiagnostic {
    pub position: usize,
    pub message: String,
}

impl Formula {
    pub fn atom(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Formula::Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn equality(left: Term, right: Term) -> Self {
        Formula::Equality(left, right)
    }

    #[allow(clippy::should_implement_trait)] // constructor, not an operator impl
    pub fn not(inner: Formula) -> Self {
        Formula::Not(Box::new(inner))
    }

    pub fn and(left: Formula, right: Formula) -> Self {
        Formula::And(Box::new(left), Box::new(right))
    }

    pub fn or(left: Formula, right: Formula) -> Self {
        Formula::Or(Box::new(left), Box::new(right))
    }

    pub fn xor(left: Formula, right: Formula) -> Self {
        Formula::Xor(Box::new(left), Box::new(right))
    }

    pub fn implies(premise: Formula, conclusion: Formula) -> Self {
        Formula::Implies(Box::new(premise), Box::new(conclusion))
    }

    pub fn iff(left: Formula, right: Formula) -> Self {
        Formula::Iff(Box::new(left), Box::new(right))
    }

    pub fn forall(var: impl Into<String>, body: Formula) -> Self {
        Formula::Forall(var.into(), Box::new(body))
    }

    pub fn exists(var: impl Into<String>, body: Formula) -> Self {
        Formula::Exists(var.into(), Box::new(body))
    }
}

pub fn constant(name: impl Into<String>) -> Term {
    Term::Constant(name.into())
}

pub fn variable(name: impl Into<String>) -> Term {
    Term::Variable(name.into())
}

/// Mechanical negation: wraps in `Not`, collapsing exactly one double
/// negation. No other rewriting: `negate(Or(a, b))` is `Not(Or(a, b))`,
/// never a De Morgan expansion.
pub fn negate(f: &Formula) -> Formula {
    match f {
        Formula::Not(inner) => (**inner).clone(),
        other => Formula::not(other.clone()),
    }
}

/// All constant names occurring in the given formulas, in lexicographic
/// order. Variables are excluded.
pub fn constants(formulas: &[Formula]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for f in formulas {
        collect_constants(f, &mut out);
    }
    out
}

fn collect_constants(f: &Formula, out: &mut BTreeSet<String>) {
    match f {
        Formula::Atom { args, .. } => {
            for t in args {
                if let Term::Constant(name) = t {
                    out.insert(name.clone());
                }
            }
        }
        Formula::Equality(l, r) => {
            for t in [l, r] {
                if let Term::Constant(name) = t {
                    out.insert(name.clone());
                }
            }
        }
        Formula::Not(g) => collect_constants(g, out),
        Formula::And(a, b)
        | Formula::Or(a, b)
        | Formula::Xor(a, b)
        | Formula::Implies(a, b)
        | Formula::Iff(a, b) => {
            collect_constants(a, out);
            collect_constants(b, out);
        }
        Formula::Forall(_, body) | Formula::Exists(_, body) => collect_constants(body, out),
    }
}

/// Canonical fully parenthesized Unicode rendering. `parse_formula` on the
/// result reproduces the formula up to alpha-renaming.
pub fn render(f: &Formula) -> String {
    let mut out = String::new();
    render_into(f, &mut out);
    out
}

fn render_into(f: &Formula, out: &mut String) {
    match f {
        Formula::Atom { predicate, args } => {
            out.push_str(predicate);
            if !args.is_empty() {
                out.push('(');
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(t.name());
                }
                out.push(')');
            }
        }
        Formula::Equality(l, r) => {
            out.push('(');
            out.push_str(l.name());
            out.push_str(" = ");
            out.push_str(r.name());
            out.push(')');
        }
        Formula::Not(g) => {
            out.push_str("¬(");
            render_into(g, out);
            out.push(')');
        }
        Formula::And(a, b) => render_binary(a, "∧", b, out),
        Formula::Or(a, b) => render_binary(a, "∨", b, out),
        Formula::Xor(a, b) => render_binary(a, "⊕", b, out),
        Formula::Implies(a, b) => render_binary(a, "→", b, out),
        Formula::Iff(a, b) => render_binary(a, "↔", b, out),
        Formula::Forall(v, body) => render_quantifier('∀', v, body, out),
        Formula::Exists(v, body) => render_quantifier('∃', v, body, out),
    }
}

fn render_binary(a: &Formula, op: &str, b: &Formula, out: &mut String) {
    out.push('(');
    render_into(a, out);
    out.push(' ');
    out.push_str(op);
    out.push(' ');
    render_into(b, out);
    out.push(')');
}

fn render_quantifier(sym: char, var: &str, body: &Formula, out: &mut String) {
    out.push(sym);
    out.push_str(var);
    out.push_str(" (");
    render_into(body, out);
    out.push(')');
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

/// Structural equality up to renaming of bound variables.
pub fn alpha_eq(a: &Formula, b: &Formula) -> bool {
    alpha_eq_rec(a, b, &mut Vec::new())
}

fn alpha_eq_rec(a: &Formula, b: &Formula, scope: &mut Vec<(String, String)>) -> bool {
    match (a, b) {
        (
            Formula::Atom {
                predicate: pa,
                args: aa,
            },
            Formula::Atom {
                predicate: pb,
                args: ab,
            },
        ) => {
            pa == pb && aa.len() == ab.len() && aa.iter().zip(ab).all(|(x, y)| term_eq(x, y, scope))
        }
        (Formula::Equality(la, ra), Formula::Equality(lb, rb)) => {
            term_eq(la, lb, scope) && term_eq(ra, rb, scope)
        }
        (Formula::Not(ga), Formula::Not(gb)) => alpha_eq_rec(ga, gb, scope),
        (Formula::And(xa, ya), Formula::And(xb, yb))
        | (Formula::Or(xa, ya), Formula::Or(xb, yb))
        | (Formula::Xor(xa, ya), Formula::Xor(xb, yb))
        | (Formula::Implies(xa, ya), Formula::Implies(xb, yb))
        | (Formula::Iff(xa, ya), Formula::Iff(xb, yb)) => {
            alpha_eq_rec(xa, xb, scope) && alpha_eq_rec(ya, yb, scope)
        }
        (Formula::Forall(va, ba), Formula::Forall(vb, bb))
        | (Formula::Exists(va, ba), Formula::Exists(vb, bb)) => {
            scope.push((va.clone(), vb.clone()));
            let eq = alpha_eq_rec(ba, bb, scope);
            scope.pop();
            eq
        }
        _ => false,
    }
}

fn term_eq(a: &Term, b: &Term, scope: &[(String, String)]) -> bool {
    match (a, b) {
        (Term::Constant(x), Term::Constant(y)) => x == y,
        (Term::Variable(x), Term::Variable(y)) => {
            // Bound variables match iff they pair with the same binder depth.
            for (la, lb) in scope.iter().rev() {
                let hit_a = la == x;
                let hit_b = lb == y;
                if hit_a || hit_b {
                    return hit_a && hit_b;
                }
            }
            x == y
        }
        _ => false,
    }
}
