//! Recursive-descent parser with binder resolution and alpha-normalization.

use std::collections::{HashMap, HashSet};

use super::lexer::{tokenize, Tok, Token};
use super::{Formula, ParseDiagnostic, Term};

/// Parses a closed formula. Errors carry the byte offset of the offending
/// token. Shadowed quantifier variables are accepted and alpha-renamed so
/// every bound name is unique in the result.
pub fn parse_formula(text: &str) -> Result<Formula, ParseDiagnostic> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ParseDiagnostic {
            position: 0,
            message: "empty input".into(),
        });
    }
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        end: text.len(),
        scope: Vec::new(),
        binders_seen: HashSet::new(),
        unbound: Vec::new(),
    };
    let formula = parser.formula()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseDiagnostic {
            position: tok.pos,
            message: "unexpected token after end of formula".into(),
        });
    }
    // Post-pass: an unbound occurrence of a quantified name escaped its
    // binder's scope, and unbound conventional variable names (x, y, z, ...)
    // have no binder at all. Both are free variables, not constants.
    for (name, pos) in &parser.unbound {
        if parser.binders_seen.contains(name) || is_conventional_variable(name) {
            return Err(ParseDiagnostic {
                position: *pos,
                message: format!("free variable `{name}`"),
            });
        }
    }
    Ok(alpha_normalize(formula))
}

/// `u`..`z` with an optional numeric suffix: the names FOLIO-style formulas
/// reserve in practice for quantified variables.
fn is_conventional_variable(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some('u'..='z')) && chars.all(|c| c.is_ascii_digit())
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
    scope: Vec<String>,
    binders_seen: HashSet<String>,
    unbound: Vec<(String, usize)>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn advance(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn fail(&self, position: usize, message: impl Into<String>) -> ParseDiagnostic {
        ParseDiagnostic {
            position,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseDiagnostic> {
        match self.peek() {
            Some(t) if &t.tok == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.fail(self.here(), format!("expected {what}"))),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseDiagnostic> {
        self.iff()
    }

    fn iff(&mut self) -> Result<Formula, ParseDiagnostic> {
        let left = self.implies()?;
        if matches!(self.peek(), Some(t) if t.tok == Tok::Iff) {
            self.pos += 1;
            let right = self.iff()?;
            return Ok(Formula::iff(left, right));
        }
        Ok(left)
    }

    fn implies(&mut self) -> Result<Formula, ParseDiagnostic> {
        let left = self.xor()?;
        if matches!(self.peek(), Some(t) if t.tok == Tok::Implies) {
            self.pos += 1;
            let right = self.implies()?;
            return Ok(Formula::implies(left, right));
        }
        Ok(left)
    }

    fn xor(&mut self) -> Result<Formula, ParseDiagnostic> {
        let mut left = self.or()?;
        while matches!(self.peek(), Some(t) if t.tok == Tok::Xor) {
            self.pos += 1;
            let right = self.or()?;
            left = Formula::xor(left, right);
        }
        Ok(left)
    }

    fn or(&mut self) -> Result<Formula, ParseDiagnostic> {
        let mut left = self.and()?;
        while matches!(self.peek(), Some(t) if t.tok == Tok::Or) {
            self.pos += 1;
            let right = self.and()?;
            left = Formula::or(left, right);
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Formula, ParseDiagnostic> {
        let mut left = self.unary()?;
        while matches!(self.peek(), Some(t) if t.tok == Tok::And) {
            self.pos += 1;
            let right = self.unary()?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, ParseDiagnostic> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Forall) => self.quantifier(true),
            Some(Tok::Exists) => self.quantifier(false),
            _ => self.primary(),
        }
    }

    fn quantifier(&mut self, universal: bool) -> Result<Formula, ParseDiagnostic> {
        self.pos += 1;
        let mut vars = vec![self.binder_name()?];
        while matches!(self.peek(), Some(t) if t.tok == Tok::Comma) {
            self.pos += 1;
            vars.push(self.binder_name()?);
        }
        for v in &vars {
            self.scope.push(v.clone());
            self.binders_seen.insert(v.clone());
        }
        let body = self.unary()?;
        for _ in &vars {
            self.scope.pop();
        }
        let mut out = body;
        for v in vars.into_iter().rev() {
            out = if universal {
                Formula::forall(v, out)
            } else {
                Formula::exists(v, out)
            };
        }
        Ok(out)
    }

    fn binder_name(&mut self) -> Result<String, ParseDiagnostic> {
        match self.advance() {
            Some(Token {
                tok: Tok::Ident(name),
                ..
            }) => Ok(name.clone()),
            other => {
                let pos = other.map_or(self.end, |t| t.pos);
                Err(self.fail(pos, "expected quantifier variable name"))
            }
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseDiagnostic> {
        match self.peek() {
            Some(Token {
                tok: Tok::LParen,
                pos,
            }) => {
                let open = *pos;
                self.pos += 1;
                let inner = self.formula()?;
                if self.peek().is_none() {
                    return Err(self.fail(open, "unbalanced parenthesis"));
                }
                self.expect(&Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Token {
                tok: Tok::Ident(name),
                pos,
            }) => {
                let (name, pos) = (name.clone(), *pos);
                self.pos += 1;
                match self.peek().map(|t| &t.tok) {
                    Some(Tok::LParen) => {
                        self.pos += 1;
                        let args = self.arg_list()?;
                        self.expect(&Tok::RParen, "`)` closing the argument list")?;
                        if matches!(self.peek().map(|t| &t.tok), Some(Tok::Eq | Tok::Neq)) {
                            return Err(self.fail(
                                self.here(),
                                "equality operands must be constants or variables",
                            ));
                        }
                        Ok(Formula::Atom {
                            predicate: name,
                            args,
                        })
                    }
                    Some(Tok::Eq) => {
                        self.pos += 1;
                        let left = self.resolve_term(name, pos);
                        let right = self.term()?;
                        Ok(Formula::Equality(left, right))
                    }
                    Some(Tok::Neq) => {
                        self.pos += 1;
                        let left = self.resolve_term(name, pos);
                        let right = self.term()?;
                        Ok(Formula::not(Formula::Equality(left, right)))
                    }
                    _ => Ok(Formula::Atom {
                        predicate: name,
                        args: vec![],
                    }),
                }
            }
            Some(Token {
                tok: Tok::Opaque(text),
                pos,
            }) => {
                let (text, pos) = (text.clone(), *pos);
                self.pos += 1;
                match self.peek().map(|t| &t.tok) {
                    Some(Tok::Eq) => {
                        self.pos += 1;
                        let right = self.term()?;
                        Ok(Formula::Equality(Term::Constant(text), right))
                    }
                    Some(Tok::Neq) => {
                        self.pos += 1;
                        let right = self.term()?;
                        Ok(Formula::not(Formula::Equality(Term::Constant(text), right)))
                    }
                    _ => Err(self.fail(pos, "a literal cannot stand alone as a formula")),
                }
            }
            Some(Token {
                tok: Tok::RParen,
                pos,
            }) => Err(self.fail(*pos, "unbalanced parenthesis")),
            Some(t) => Err(self.fail(t.pos, "expected a formula")),
            None => Err(self.fail(self.end, "unexpected end of input")),
        }
    }

    fn arg_list(&mut self) -> Result<Vec<Term>, ParseDiagnostic> {
        let mut args = vec![self.term()?];
        while matches!(self.peek(), Some(t) if t.tok == Tok::Comma) {
            self.pos += 1;
            args.push(self.term()?);
        }
        Ok(args)
    }

    fn term(&mut self) -> Result<Term, ParseDiagnostic> {
        match self.advance() {
            Some(Token {
                tok: Tok::Ident(name),
                pos,
            }) => {
                if matches!(self.peek().map(|t| &t.tok), Some(Tok::LParen)) {
                    return Err(
                        self.fail(*pos, format!("function symbol `{name}` is not supported"))
                    );
                }
                Ok(self.resolve_term(name.clone(), *pos))
            }
            // Arithmetic-flavored or quoted argument tokens become opaque constants.
            Some(Token {
                tok: Tok::Opaque(text),
                ..
            }) => Ok(Term::Constant(text.clone())),
            other => {
                let pos = other.map_or(self.end, |t| t.pos);
                Err(self.fail(pos, "expected a term"))
            }
        }
    }

    fn resolve_term(&mut self, name: String, pos: usize) -> Term {
        if self.scope.iter().rev().any(|v| v == &name) {
            Term::Variable(name)
        } else {
            self.unbound.push((name.clone(), pos));
            Term::Constant(name)
        }
    }
}

/// Renames bound variables so each binder introduces a name unique within the
/// whole formula (and distinct from every constant and predicate name).
fn alpha_normalize(f: Formula) -> Formula {
    let mut used = HashSet::new();
    collect_names(&f, &mut used);
    let mut env: HashMap<String, Vec<String>> = HashMap::new();
    rename(f, &mut used, &mut env)
}

fn collect_names(f: &Formula, out: &mut HashSet<String>) {
    match f {
        Formula::Atom { predicate, args } => {
            out.insert(predicate.clone());
            for t in args {
                if let Term::Constant(n) = t {
                    out.insert(n.clone());
                }
            }
        }
        Formula::Equality(l, r) => {
            for t in [l, r] {
                if let Term::Constant(n) = t {
                    out.insert(n.clone());
                }
            }
        }
        Formula::Not(g) => collect_names(g, out),
        Formula::And(a, b)
        | Formula::Or(a, b)
        | Formula::Xor(a, b)
        | Formula::Implies(a, b)
        | Formula::Iff(a, b) => {
            collect_names(a, out);
            collect_names(b, out);
        }
        Formula::Forall(_, body) | Formula::Exists(_, body) => collect_names(body, out),
    }
}

fn rename(
    f: Formula,
    used: &mut HashSet<String>,
    env: &mut HashMap<String, Vec<String>>,
) -> Formula {
    match f {
        Formula::Atom { predicate, args } => Formula::Atom {
            predicate,
            args: args.into_iter().map(|t| rename_term(t, env)).collect(),
        },
        Formula::Equality(l, r) => Formula::Equality(rename_term(l, env), rename_term(r, env)),
        Formula::Not(g) => Formula::not(rename(*g, used, env)),
        Formula::And(a, b) => Formula::and(rename(*a, used, env), rename(*b, used, env)),
        Formula::Or(a, b) => Formula::or(rename(*a, used, env), rename(*b, used, env)),
        Formula::Xor(a, b) => Formula::xor(rename(*a, used, env), rename(*b, used, env)),
        Formula::Implies(a, b) => Formula::implies(rename(*a, used, env), rename(*b, used, env)),
        Formula::Iff(a, b) => Formula::iff(rename(*a, used, env), rename(*b, used, env)),
        Formula::Forall(v, body) => {
            let (fresh, body) = rename_binder(v, *body, used, env);
            Formula::forall(fresh, body)
        }
        Formula::Exists(v, body) => {
            let (fresh, body) = rename_binder(v, *body, used, env);
            Formula::exists(fresh, body)
        }
    }
}

fn rename_binder(
    var: String,
    body: Formula,
    used: &mut HashSet<String>,
    env: &mut HashMap<String, Vec<String>>,
) -> (String, Formula) {
    // First binder with a given name keeps it; later ones get a numeric suffix.
    let fresh = if used.contains(&var) {
        let mut k = 1;
        loop {
            let candidate = format!("{var}_{k}");
            if !used.contains(&candidate) {
                break candidate;
            }
            k += 1;
        }
    } else {
        var.clone()
    };
    used.insert(fresh.clone());
    env.entry(var.clone()).or_default().push(fresh.clone());
    let body = rename(body, used, env);
    env.get_mut(&var).expect("binder stack").pop();
    (fresh, body)
}

fn rename_term(t: Term, env: &HashMap<String, Vec<String>>) -> Term {
    match t {
        Term::Variable(name) => {
            let fresh = env
                .get(&name)
                .and_then(|stack| stack.last())
                .cloned()
                .unwrap_or(name);
            Term::Variable(fresh)
        }
        c => c,
    }
}
