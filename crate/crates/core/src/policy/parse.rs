//! Recursive-descent parser for policy regular expressions.
//!
//! Grammar (whitespace separates adjacent tokens, otherwise ignored):
//!   alternation := concat ('|' concat)*
//!   concat      := factor+
//!   factor      := atom ('*' | '?' | '+')*
//!   atom        := TOKEN | '(' alternation ')'
//! Tokens are identifiers over `[A-Za-z0-9_.:-]`, so labels like `c2p` or
//! `c2p:AS7018` are single atomic symbols.

use crate::error::{Error, Result};
use crate::graph::Alphabet;
use crate::policy::PolicyExpr;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Star,
    Quest,
    Plus,
    Pipe,
    Open,
    Close,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | ':' | '-')
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let mut toks = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '*' => {
                toks.push((Tok::Star, pos));
                chars.next();
            }
            '?' => {
                toks.push((Tok::Quest, pos));
                chars.next();
            }
            '+' => {
                toks.push((Tok::Plus, pos));
                chars.next();
            }
            '|' => {
                toks.push((Tok::Pipe, pos));
                chars.next();
            }
            '(' => {
                toks.push((Tok::Open, pos));
                chars.next();
            }
            ')' => {
                toks.push((Tok::Close, pos));
                chars.next();
            }
            c if is_ident_char(c) => {
                let mut ident = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if is_ident_char(c) {
                        ident.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(ident), pos));
            }
            other => {
                return Err(Error::SyntaxError {
                    position: pos,
                    reason: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    alphabet: &'a Alphabet,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn alternation(&mut self) -> Result<PolicyExpr> {
        let mut parts = vec![self.concat()?];
        while matches!(self.peek(), Some((Tok::Pipe, _))) {
            self.bump();
            parts.push(self.concat()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PolicyExpr::Alt(parts)
        })
    }

    fn concat(&mut self) -> Result<PolicyExpr> {
        let mut parts = Vec::new();
        while matches!(self.peek(), Some((Tok::Ident(_), _)) | Some((Tok::Open, _))) {
            parts.push(self.factor()?);
        }
        match parts.len() {
            0 => Err(Error::SyntaxError {
                position: self.here(),
                reason: "expected a token or `(`".to_string(),
            }),
            1 => Ok(parts.pop().unwrap()),
            _ => Ok(PolicyExpr::Concat(parts)),
        }
    }

    fn factor(&mut self) -> Result<PolicyExpr> {
        let mut expr = self.atom()?;
        loop {
            match self.peek() {
                Some((Tok::Star, _)) => {
                    self.bump();
                    expr = PolicyExpr::Star(Box::new(expr));
                }
                Some((Tok::Quest, _)) => {
                    self.bump();
                    expr = PolicyExpr::Opt(Box::new(expr));
                }
                Some((Tok::Plus, _)) => {
                    self.bump();
                    expr = PolicyExpr::Plus(Box::new(expr));
                }
                _ => return Ok(expr),
            }
        }
    }

    fn atom(&mut self) -> Result<PolicyExpr> {
        match self.bump() {
            Some((Tok::Ident(name), pos)) => {
                if self.alphabet.symbol(&name).is_none() {
                    return Err(Error::UnknownToken {
                        token: name,
                        position: pos,
                    });
                }
                Ok(PolicyExpr::Token(name))
            }
            Some((Tok::Open, open_pos)) => {
                let inner = self.alternation()?;
                match self.bump() {
                    Some((Tok::Close, _)) => Ok(inner),
                    _ => Err(Error::SyntaxError {
                        position: open_pos,
                        reason: "unclosed `(`".to_string(),
                    }),
                }
            }
            Some((tok, pos)) => Err(Error::SyntaxError {
                position: pos,
                reason: format!("unexpected `{tok:?}`"),
            }),
            None => Err(Error::SyntaxError {
                position: self.end,
                reason: "unexpected end of expression".to_string(),
            }),
        }
    }
}

/// Parses a policy regular expression over the given alphabet.
pub fn parse_policy(text: &str, alphabet: &Alphabet) -> Result<PolicyExpr> {
    let toks = lex(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        alphabet,
        end: text.len(),
    };
    let expr = parser.alternation()?;
    if let Some((tok, pos)) = parser.peek() {
        return Err(Error::SyntaxError {
            position: *pos,
            reason: format!("trailing `{tok:?}`"),
        });
    }
    Ok(expr)
}
