//! Tokenizer for the formula grammar. Produces tokens tagged with their byte
//! offsets so diagnostics can point into the input.

use super::ParseDiagnostic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Tok {
    Forall,
    Exists,
    Not,
    And,
    Or,
    Xor,
    Implies,
    Iff,
    Eq,
    Neq,
    LParen,
    RParen,
    Comma,
    Ident(String),
    /// Numeric or quoted literal; valid only in argument position, where it
    /// becomes an opaque constant.
    Opaque(String),
}

#[derive(Debug, Clone)]
pub(super) struct Token {
    pub tok: Tok,
    pub pos: usize,
}

pub(super) fn tokenize(text: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let mut tokens = Vec::new();
    let mut iter = text.char_indices().peekable();

    while let Some(&(pos, ch)) = iter.peek() {
        if ch.is_whitespace() {
            iter.next();
            continue;
        }
        let tok = match ch {
            '∀' => one(&mut iter, Tok::Forall),
            '∃' => one(&mut iter, Tok::Exists),
            '¬' | '~' => one(&mut iter, Tok::Not),
            '∧' | '&' => one(&mut iter, Tok::And),
            '∨' | '|' => one(&mut iter, Tok::Or),
            '⊕' | '^' => one(&mut iter, Tok::Xor),
            '→' => one(&mut iter, Tok::Implies),
            '↔' => one(&mut iter, Tok::Iff),
            '=' => one(&mut iter, Tok::Eq),
            '≠' => one(&mut iter, Tok::Neq),
            '(' => one(&mut iter, Tok::LParen),
            ')' => one(&mut iter, Tok::RParen),
            ',' => one(&mut iter, Tok::Comma),
            '!' => {
                iter.next();
                if matches!(iter.peek(), Some(&(_, '='))) {
                    iter.next();
                    Tok::Neq
                } else {
                    Tok::Not
                }
            }
            '-' => {
                iter.next();
                match iter.peek() {
                    Some(&(_, '>')) => {
                        iter.next();
                        Tok::Implies
                    }
                    _ => {
                        return Err(ParseDiagnostic {
                            position: pos,
                            message: "unknown token `-` (expected `->`)".into(),
                        })
                    }
                }
            }
            '<' => {
                iter.next();
                let ok = matches!(iter.peek(), Some(&(_, '-'))) && {
                    iter.next();
                    matches!(iter.peek(), Some(&(_, '>'))) && {
                        iter.next();
                        true
                    }
                };
                if ok {
                    Tok::Iff
                } else {
                    return Err(ParseDiagnostic {
                        position: pos,
                        message: "unknown token `<` (expected `<->`)".into(),
                    });
                }
            }
            '"' => {
                iter.next();
                let start = pos;
                loop {
                    match iter.next() {
                        Some((end, '"')) => {
                            break Tok::Opaque(text[start..=end].to_string());
                        }
                        Some(_) => continue,
                        None => {
                            return Err(ParseDiagnostic {
                                position: start,
                                message: "unterminated string literal".into(),
                            })
                        }
                    }
                }
            }
            c if c.is_ascii_digit() => {
                let start = pos;
                let mut end = pos;
                while let Some(&(p, c)) = iter.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        end = p;
                        iter.next();
                    } else {
                        break;
                    }
                }
                Tok::Opaque(text[start..=end].to_string())
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = pos;
                let mut end = pos;
                while let Some(&(p, c)) = iter.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        end = p;
                        iter.next();
                    } else {
                        break;
                    }
                }
                let word = &text[start..=end];
                match word {
                    "forall" => Tok::Forall,
                    "exists" => Tok::Exists,
                    _ => Tok::Ident(word.to_string()),
                }
            }
            other => {
                return Err(ParseDiagnostic {
                    position: pos,
                    message: format!("unknown token `{other}`"),
                })
            }
        };
        tokens.push(Token { tok, pos });
    }

    Ok(tokens)
}

fn one(iter: &mut std::iter::Peekable<std::str::CharIndices>, tok: Tok) -> Tok {
    iter.next();
    tok
}
