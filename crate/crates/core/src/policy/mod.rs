//! Policy language: regular expressions over multi-character label tokens,
//! compiled to epsilon-NFAs.

mod nfa;
mod parse;
mod presets;

pub use nfa::{compile_nfa, StateId, PolicyNfa, Transition};
pub use parse::parse_policy;
pub use presets::{expand_over_tuple_alphabet, preset, preset_expr, PRESET_NAMES};

use std::collections::BTreeSet;
use std::fmt;

/// Abstract syntax of a policy regular expression. Leaves are whole label
/// tokens (such as `c2p`), not characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyExpr {
    Token(String),
    Concat(Vec<PolicyExpr>),
    Alt(Vec<PolicyExpr>),
    Star(Box<PolicyExpr>),
    Opt(Box<PolicyExpr>),
    Plus(Box<PolicyExpr>),
}

impl PolicyExpr {
    pub fn token(name: impl Into<String>) -> Self {
        PolicyExpr::Token(name.into())
    }

    /// Reference matcher: decides membership of a token string by direct
    /// evaluation of the expression, independent of any automaton. Works on
    /// sets of reachable positions, so star never loops.
    pub fn matches<S: AsRef<str>>(&self, tokens: &[S]) -> bool {
        let starts: BTreeSet<usize> = BTreeSet::from([0]);
        self.ends_from(tokens, &starts).contains(&tokens.len())
    }

    fn ends_from<S: AsRef<str>>(
        &self,
        tokens: &[S],
        starts: &BTreeSet<usize>,
    ) -> BTreeSet<usize> {
        match self {
            PolicyExpr::Token(t) => starts
                .iter()
                .filter(|&&i| i < tokens.len() && tokens[i].as_ref() == t)
                .map(|&i| i + 1)
                .collect(),
            PolicyExpr::Concat(parts) => {
                let mut current = starts.clone();
                for part in parts {
                    current = part.ends_from(tokens, &current);
                    if current.is_empty() {
                        break;
                    }
                }
                current
            }
            PolicyExpr::Alt(parts) => parts
                .iter()
                .flat_map(|p| p.ends_from(tokens, starts))
                .collect(),
            PolicyExpr::Star(inner) => {
                let mut reached = starts.clone();
                loop {
                    let step = inner.ends_from(tokens, &reached);
                    let before = reached.len();
                    reached.extend(step);
                    if reached.len() == before {
                        return reached;
                    }
                }
            }
            PolicyExpr::Opt(inner) => {
                let mut reached = starts.clone();
                reached.extend(inner.ends_from(tokens, starts));
                reached
            }
            PolicyExpr::Plus(inner) => {
                PolicyExpr::Star(inner.clone()).ends_from(tokens, &inner.ends_from(tokens, starts))
            }
        }
    }

    /// All leaf tokens, in syntactic order (with repetitions).
    pub fn tokens(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_tokens(&mut out);
        out
    }

    fn collect_tokens<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            PolicyExpr::Token(t) => out.push(t),
            PolicyExpr::Concat(parts) | PolicyExpr::Alt(parts) => {
                parts.iter().for_each(|p| p.collect_tokens(out))
            }
            PolicyExpr::Star(inner) | PolicyExpr::Opt(inner) | PolicyExpr::Plus(inner) => {
                inner.collect_tokens(out)
            }
        }
    }
}

impl fmt::Display for PolicyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atom(expr: &PolicyExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match expr {
                PolicyExpr::Token(t) => write!(f, "{t}"),
                other => {
                    write!(f, "(")?;
                    write!(f, "{other}")?;
                    write!(f, ")")
                }
            }
        }
        match self {
            PolicyExpr::Token(t) => write!(f, "{t}"),
            PolicyExpr::Concat(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    match p {
                        PolicyExpr::Alt(_) => atom(p, f)?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
            PolicyExpr::Alt(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            PolicyExpr::Star(inner) => {
                atom(inner, f)?;
                write!(f, "*")
            }
            PolicyExpr::Opt(inner) => {
                atom(inner, f)?;
                write!(f, "?")
            }
            PolicyExpr::Plus(inner) => {
                atom(inner, f)?;
                write!(f, "+")
            }
        }
    }
}
