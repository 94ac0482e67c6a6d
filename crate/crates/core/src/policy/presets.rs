//! Named policy presets for inter-domain routing.

use crate::error::{Error, Result};
use crate::graph::Alphabet;
use crate::policy::{compile_nfa, parse_policy, PolicyExpr, PolicyNfa};

pub const PRESET_NAMES: &[&str] = &["valley-free", "multiple-peering-links", "any"];

fn preset_regex(name: &str) -> Result<&'static str> {
    match name {
        "valley-free" => Ok("c2p* p2p? p2c*"),
        "multiple-peering-links" => Ok("c2p* p2p* p2c*"),
        "any" => Ok("(c2p|p2p|p2c)*"),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Expression form of a preset over the standard `{c2p, p2p, p2c}` alphabet.
pub fn preset_expr(name: &str) -> Result<(Alphabet, PolicyExpr)> {
    let alphabet = Alphabet::new(["c2p", "p2p", "p2c"])?;
    let expr = parse_policy(preset_regex(name)?, &alphabet)?;
    Ok((alphabet, expr))
}

/// Compiled form of a preset over the standard `{c2p, p2p, p2c}` alphabet.
pub fn preset(name: &str) -> Result<(Alphabet, PolicyNfa)> {
    let (alphabet, expr) = preset_expr(name)?;
    let nfa = compile_nfa(&expr, &alphabet)?;
    Ok((alphabet, nfa))
}

/// Rewrites a base policy over a tuple-label alphabet: every leaf token `b`
/// becomes the alternation of all tuple tokens of the form `b:<suffix>`
/// (plus `b` itself if present). Tuple labels encode pairs such as
/// `(relationship, next_AS)` as flat tokens like `c2p:AS7018`.
pub fn expand_over_tuple_alphabet(
    base: &PolicyExpr,
    tuple_alphabet: &Alphabet,
) -> Result<PolicyExpr> {
    match base {
        PolicyExpr::Token(b) => {
            let prefix = format!("{b}:");
            let class: Vec<PolicyExpr> = tuple_alphabet
                .names()
                .filter(|t| *t == b || t.starts_with(&prefix))
                .map(PolicyExpr::token)
                .collect();
            match class.len() {
                0 => Err(Error::UnknownToken {
                    token: b.clone(),
                    position: 0,
                }),
                1 => Ok(class.into_iter().next().unwrap()),
                _ => Ok(PolicyExpr::Alt(class)),
            }
        }
        PolicyExpr::Concat(parts) => Ok(PolicyExpr::Concat(
            parts
                .iter()
                .map(|p| expand_over_tuple_alphabet(p, tuple_alphabet))
                .collect::<Result<_>>()?,
        )),
        PolicyExpr::Alt(parts) => Ok(PolicyExpr::Alt(
            parts
                .iter()
                .map(|p| expand_over_tuple_alphabet(p, tuple_alphabet))
                .collect::<Result<_>>()?,
        )),
        PolicyExpr::Star(inner) => Ok(PolicyExpr::Star(Box::new(expand_over_tuple_alphabet(
            inner,
            tuple_alphabet,
        )?))),
        PolicyExpr::Opt(inner) => Ok(PolicyExpr::Opt(Box::new(expand_over_tuple_alphabet(
            inner,
            tuple_alphabet,
        )?))),
        PolicyExpr::Plus(inner) => Ok(PolicyExpr::Plus(Box::new(expand_over_tuple_alphabet(
            inner,
            tuple_alphabet,
        )?))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valley_free_rejects_valleys() {
        let (_, nfa) = preset("valley-free").unwrap();
        assert!(!nfa.accepts(&["p2c", "c2p"]));
        assert!(nfa.accepts(&["c2p", "p2p", "p2c"]));
        assert!(!nfa.accepts(&["c2p", "p2p", "p2p", "p2c"]));
    }

    #[test]
    fn multiple_peering_links_allows_peer_chains() {
        let (_, nfa) = preset("multiple-peering-links").unwrap();
        assert!(nfa.accepts(&["c2p", "p2p", "p2p", "p2c"]));
        assert!(!nfa.accepts(&["p2c", "p2p", "c2p"]));
    }

    #[test]
    fn any_accepts_everything_up_to_length_5() {
        let (alphabet, nfa) = preset("any").unwrap();
        let symbols: Vec<&str> = alphabet.names().collect();
        let mut frontier: Vec<Vec<&str>> = vec![vec![]];
        for _ in 0..=5 {
            for s in &frontier {
                assert!(nfa.accepts(s), "rejected {s:?}");
            }
            frontier = frontier
                .iter()
                .flat_map(|s| {
                    symbols.iter().map(move |sym| {
                        let mut t = s.clone();
                        t.push(sym);
                        t
                    })
                })
                .collect();
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn tuple_expansion() {
        let tuples = Alphabet::new(["c2p:W", "c2p:X", "p2c:Y", "p2p:Z"]).unwrap();
        let (_, base) = preset_expr("valley-free").unwrap();
        let expanded = expand_over_tuple_alphabet(&base, &tuples).unwrap();
        assert!(expanded.matches(&["c2p:W", "c2p:X", "p2p:Z", "p2c:Y"]));
        assert!(!expanded.matches(&["p2c:Y", "c2p:W"]));
    }

    #[test]
    fn tuple_expansion_missing_class() {
        let tuples = Alphabet::new(["c2p:W"]).unwrap();
        let (_, base) = preset_expr("valley-free").unwrap();
        assert!(matches!(
            expand_over_tuple_alphabet(&base, &tuples),
            Err(Error::UnknownToken { .. })
        ));
    }
}
