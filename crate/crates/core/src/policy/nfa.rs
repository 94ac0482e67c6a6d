//! Nondeterministic finite automata over label tokens, with epsilon
//! transitions. Compiled from policy expressions Thompson-style, or built
//! by hand / from the text format.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{Alphabet, Symbol, EPSILON_SPELLINGS};
use crate::policy::PolicyExpr;

/// Index of a state within a [`PolicyNfa`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

/// A transition `from --label--> to`; `label = None` is an ε-transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub from: StateId,
    pub label: Option<Symbol>,
    pub to: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyNfa {
    alphabet: Alphabet,
    state_names: Vec<String>,
    start: StateId,
    accepting: BTreeSet<StateId>,
    transitions: Vec<Transition>,
}

impl PolicyNfa {
    /// Builds an NFA from parts. Transition labels are symbol names, or one
    /// of the epsilon spellings (`eps`, `ε`) for ε-transitions.
    pub fn from_parts<S: AsRef<str>>(
        alphabet: Alphabet,
        state_names: Vec<String>,
        start: u32,
        accepting: &[u32],
        transitions: &[(u32, S, u32)],
    ) -> Result<Self> {
        let n = state_names.len() as u32;
        let check = |q: u32| -> Result<StateId> {
            if q < n {
                Ok(StateId(q))
            } else {
                Err(Error::InvalidInput(format!("state index {q} out of range")))
            }
        };
        let start = check(start)?;
        let accepting = accepting
            .iter()
            .map(|&q| check(q))
            .collect::<Result<BTreeSet<_>>>()?;
        let mut trans = Vec::with_capacity(transitions.len());
        for (from, label, to) in transitions {
            let label = label.as_ref();
            let label = if EPSILON_SPELLINGS.contains(&label) {
                None
            } else {
                Some(alphabet.require(label).map_err(|_| Error::UnknownSymbol(label.to_string()))?)
            };
            trans.push(Transition {
                from: check(*from)?,
                label,
                to: check(*to)?,
            });
        }
        Ok(PolicyNfa {
            alphabet,
            state_names,
            start,
            accepting,
            transitions: trans,
        })
    }

    /// Convenience over [`PolicyNfa::from_parts`] with `q{i}` state names.
    pub fn from_indexed<S: AsRef<str>>(
        alphabet: Alphabet,
        num_states: u32,
        start: u32,
        accepting: &[u32],
        transitions: &[(u32, S, u32)],
    ) -> Result<Self> {
        let names = (0..num_states).map(|i| format!("q{i}")).collect();
        Self::from_parts(alphabet, names, start, accepting, transitions)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn state_count(&self) -> usize {
        self.state_names.len()
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.state_names[q.0 as usize]
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn accepting(&self) -> &BTreeSet<StateId> {
        &self.accepting
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// ε-labeled subset of the transition relation, as state pairs.
    pub fn epsilon_pairs(&self) -> BTreeSet<(StateId, StateId)> {
        self.transitions
            .iter()
            .filter(|t| t.label.is_none())
            .map(|t| (t.from, t.to))
            .collect()
    }

    /// The single accepting state, if there is exactly one.
    pub fn single_accepting(&self) -> Option<StateId> {
        if self.accepting.len() == 1 {
            self.accepting.iter().next().copied()
        } else {
            None
        }
    }

    fn epsilon_closure(&self, seed: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        let mut closure = seed.clone();
        let mut queue: VecDeque<StateId> = seed.iter().copied().collect();
        while let Some(q) = queue.pop_front() {
            for t in &self.transitions {
                if t.from == q && t.label.is_none() && closure.insert(t.to) {
                    queue.push_back(t.to);
                }
            }
        }
        closure
    }

    /// Subset simulation: does the NFA accept this token string?
    /// Tokens outside the alphabet have no transitions and fail the run.
    pub fn accepts<S: AsRef<str>>(&self, tokens: &[S]) -> bool {
        let mut current = self.epsilon_closure(&BTreeSet::from([self.start]));
        for token in tokens {
            let sym = match self.alphabet.symbol(token.as_ref()) {
                Some(s) => s,
                None => return false,
            };
            let stepped: BTreeSet<StateId> = self
                .transitions
                .iter()
                .filter(|t| t.label == Some(sym) && current.contains(&t.from))
                .map(|t| t.to)
                .collect();
            if stepped.is_empty() {
                return false;
            }
            current = self.epsilon_closure(&stepped);
        }
        current.iter().any(|q| self.accepting.contains(q))
    }

    /// Rewrites the automaton to have exactly one terminal state.
    ///
    /// With a single accepting state the input is returned unchanged.
    /// Otherwise a fresh state `q*` is added and every transition into an
    /// accepting state is copied with its target redirected to `q*`. If the
    /// start state itself accepts, a single ε-transition `start -> q*`
    /// keeps the empty string in the language.
    pub fn normalize_terminals(&self) -> Result<PolicyNfa> {
        if self.accepting.is_empty() {
            return Err(Error::NoAcceptingState);
        }
        if self.accepting.len() == 1 {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        let qstar = StateId(out.state_names.len() as u32);
        out.state_names.push("q*".to_string());
        let mut copies: BTreeSet<Transition> = BTreeSet::new();
        for t in &self.transitions {
            if self.accepting.contains(&t.to) {
                copies.insert(Transition {
                    from: t.from,
                    label: t.label,
                    to: qstar,
                });
            }
        }
        if self.accepting.contains(&self.start) {
            copies.insert(Transition {
                from: self.start,
                label: None,
                to: qstar,
            });
        }
        out.transitions.extend(copies);
        out.accepting = BTreeSet::from([qstar]);
        Ok(out)
    }

    /// Equivalent automaton without ε-transitions (standard closure
    /// construction). State set and names are preserved.
    pub fn eliminate_epsilon(&self) -> PolicyNfa {
        let mut transitions: BTreeSet<Transition> = BTreeSet::new();
        let mut accepting = BTreeSet::new();
        for q in 0..self.state_count() as u32 {
            let q = StateId(q);
            let closure = self.epsilon_closure(&BTreeSet::from([q]));
            if closure.iter().any(|c| self.accepting.contains(c)) {
                accepting.insert(q);
            }
            for t in &self.transitions {
                if t.label.is_some() && closure.contains(&t.from) {
                    transitions.insert(Transition {
                        from: q,
                        label: t.label,
                        to: t.to,
                    });
                }
            }
        }
        PolicyNfa {
            alphabet: self.alphabet.clone(),
            state_names: self.state_names.clone(),
            start: self.start,
            accepting,
            transitions: transitions.into_iter().collect(),
        }
    }

    /// Product automaton accepting `L(self) ∩ L(other)`. Both inputs are
    /// ε-eliminated first; only pairs reachable from the joint start are
    /// materialized.
    pub fn intersect(&self, other: &PolicyNfa) -> Result<PolicyNfa> {
        if !self.alphabet.same_symbols(&other.alphabet) {
            return Err(Error::AlphabetMismatch(format!(
                "left alphabet {{{}}} vs right alphabet {{{}}}",
                self.alphabet.names().collect::<Vec<_>>().join(","),
                other.alphabet.names().collect::<Vec<_>>().join(",")
            )));
        }
        let left = self.eliminate_epsilon();
        let right = other.eliminate_epsilon();
        // Map right-hand symbols into the left alphabet by name.
        let remap: BTreeMap<Symbol, Symbol> = right
            .alphabet
            .iter()
            .map(|(sym, name)| (sym, left.alphabet.symbol(name).expect("same symbols")))
            .collect();

        struct Product {
            index: BTreeMap<(StateId, StateId), StateId>,
            names: Vec<String>,
            queue: VecDeque<(StateId, StateId)>,
        }
        impl Product {
            fn intern(&mut self, p: (StateId, StateId), left: &PolicyNfa, right: &PolicyNfa) -> StateId {
                if let Some(&id) = self.index.get(&p) {
                    return id;
                }
                let id = StateId(self.names.len() as u32);
                self.names
                    .push(format!("{}&{}", left.state_name(p.0), right.state_name(p.1)));
                self.index.insert(p, id);
                self.queue.push_back(p);
                id
            }
        }

        let mut product = Product {
            index: BTreeMap::new(),
            names: Vec::new(),
            queue: VecDeque::new(),
        };
        let mut transitions = Vec::new();
        let mut accepting = BTreeSet::new();

        let start = product.intern((left.start, right.start), &left, &right);
        while let Some((lq, rq)) = product.queue.pop_front() {
            let id = product.index[&(lq, rq)];
            if left.accepting.contains(&lq) && right.accepting.contains(&rq) {
                accepting.insert(id);
            }
            for lt in left.transitions.iter().filter(|t| t.from == lq) {
                for rt in right.transitions.iter().filter(|t| t.from == rq) {
                    if lt.label == rt.label.map(|s| remap[&s]) {
                        let to = product.intern((lt.to, rt.to), &left, &right);
                        transitions.push(Transition {
                            from: id,
                            label: lt.label,
                            to,
                        });
                    }
                }
            }
        }
        let names = product.names;
        transitions.sort();
        transitions.dedup();
        Ok(PolicyNfa {
            alphabet: self.alphabet.clone(),
            state_names: names,
            start,
            accepting,
            transitions,
        })
    }

    /// Parses the NFA text format:
    /// ```text
    /// start: q0
    /// accept: q1 q2
    /// q0 c2p q1
    /// q1 eps q2
    /// ```
    /// With `alphabet = None` the alphabet is inferred from the symbols
    /// present (epsilon spellings excluded).
    pub fn from_text(text: &str, alphabet: Option<Alphabet>) -> Result<Self> {
        let mut start_name: Option<String> = None;
        let mut accept_names: Option<Vec<String>> = None;
        let mut rows: Vec<(String, String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("start:") {
                if start_name.is_some() {
                    return Err(Error::ParseError {
                        line: lineno + 1,
                        reason: "duplicate start line".to_string(),
                    });
                }
                let name = rest.trim();
                if name.is_empty() || name.split_whitespace().count() != 1 {
                    return Err(Error::ParseError {
                        line: lineno + 1,
                        reason: "start line must name exactly one state".to_string(),
                    });
                }
                start_name = Some(name.to_string());
            } else if let Some(rest) = line.strip_prefix("accept:") {
                if accept_names.is_some() {
                    return Err(Error::ParseError {
                        line: lineno + 1,
                        reason: "duplicate accept line".to_string(),
                    });
                }
                accept_names = Some(rest.split_whitespace().map(str::to_string).collect());
            } else {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 3 {
                    return Err(Error::ParseError {
                        line: lineno + 1,
                        reason: format!(
                            "expected `from symbol to`, got {} field(s)",
                            fields.len()
                        ),
                    });
                }
                rows.push((
                    fields[0].to_string(),
                    fields[1].to_string(),
                    fields[2].to_string(),
                ));
            }
        }
        let start_name = start_name.ok_or_else(|| Error::InvalidInput(
            "NFA text needs a `start:` line".to_string(),
        ))?;
        let accept_names = accept_names.unwrap_or_default();

        let mut state_index: BTreeMap<String, u32> = BTreeMap::new();
        let mut state_names: Vec<String> = Vec::new();
        let mut intern = |name: &str, state_names: &mut Vec<String>| -> u32 {
            if let Some(&i) = state_index.get(name) {
                return i;
            }
            let i = state_names.len() as u32;
            state_names.push(name.to_string());
            state_index.insert(name.to_string(), i);
            i
        };
        let start = intern(&start_name, &mut state_names);
        let accepting: Vec<u32> = accept_names
            .iter()
            .map(|n| intern(n, &mut state_names))
            .collect();
        let rows: Vec<(u32, String, u32)> = rows
            .into_iter()
            .map(|(f, s, t)| {
                let f = intern(&f, &mut state_names);
                let t = intern(&t, &mut state_names);
                (f, s, t)
            })
            .collect();
        let alphabet = match alphabet {
            Some(a) => a,
            None => Alphabet::new(
                rows.iter()
                    .map(|(_, s, _)| s.as_str())
                    .filter(|s| !EPSILON_SPELLINGS.contains(s))
                    .collect::<indexmap::IndexSet<&str>>(),
            )?,
        };
        PolicyNfa::from_parts(alphabet, state_names, start, &accepting, &rows)
    }

    /// Inverse of [`PolicyNfa::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "start: {}", self.state_name(self.start));
        let _ = writeln!(
            out,
            "accept: {}",
            self.accepting
                .iter()
                .map(|q| self.state_name(*q))
                .collect::<Vec<_>>()
                .join(" ")
        );
        for t in &self.transitions {
            let label = match t.label {
                Some(s) => self.alphabet.name(s),
                None => "eps",
            };
            let _ = writeln!(
                out,
                "{} {} {}",
                self.state_name(t.from),
                label,
                self.state_name(t.to)
            );
        }
        out
    }
}

/// Thompson construction: compiles a policy expression to an ε-NFA with a
/// single accepting state. Leaf tokens must belong to `alphabet`.
pub fn compile_nfa(expr: &PolicyExpr, alphabet: &Alphabet) -> Result<PolicyNfa> {
    let mut builder = Builder {
        alphabet,
        names: Vec::new(),
        transitions: Vec::new(),
    };
    let (start, end) = builder.fragment(expr)?;
    Ok(PolicyNfa {
        alphabet: alphabet.clone(),
        state_names: builder.names,
        start,
        accepting: BTreeSet::from([end]),
        transitions: builder.transitions,
    })
}

struct Builder<'a> {
    alphabet: &'a Alphabet,
    names: Vec<String>,
    transitions: Vec<Transition>,
}

impl Builder<'_> {
    fn state(&mut self) -> StateId {
        let id = StateId(self.names.len() as u32);
        self.names.push(format!("q{}", id.0));
        id
    }

    fn eps(&mut self, from: StateId, to: StateId) {
        self.transitions.push(Transition {
            from,
            label: None,
            to,
        });
    }

    fn fragment(&mut self, expr: &PolicyExpr) -> Result<(StateId, StateId)> {
        match expr {
            PolicyExpr::Token(name) => {
                let sym = self
                    .alphabet
                    .symbol(name)
                    .ok_or_else(|| Error::UnknownToken {
                        token: name.clone(),
                        position: 0,
                    })?;
                let a = self.state();
                let b = self.state();
                self.transitions.push(Transition {
                    from: a,
                    label: Some(sym),
                    to: b,
                });
                Ok((a, b))
            }
            PolicyExpr::Concat(parts) => {
                debug_assert!(!parts.is_empty());
                let mut iter = parts.iter();
                let (start, mut end) = self.fragment(iter.next().expect("nonempty concat"))?;
                for part in iter {
                    let (s, e) = self.fragment(part)?;
                    self.eps(end, s);
                    end = e;
                }
                Ok((start, end))
            }
            PolicyExpr::Alt(parts) => {
                let a = self.state();
                let b = self.state();
                for part in parts {
                    let (s, e) = self.fragment(part)?;
                    self.eps(a, s);
                    self.eps(e, b);
                }
                Ok((a, b))
            }
            PolicyExpr::Star(inner) => {
                let a = self.state();
                let b = self.state();
                let (s, e) = self.fragment(inner)?;
                self.eps(a, s);
                self.eps(a, b);
                self.eps(e, s);
                self.eps(e, b);
                Ok((a, b))
            }
            PolicyExpr::Opt(inner) => {
                let a = self.state();
                let b = self.state();
                let (s, e) = self.fragment(inner)?;
                self.eps(a, s);
                self.eps(a, b);
                self.eps(e, b);
                Ok((a, b))
            }
            PolicyExpr::Plus(inner) => {
                let a = self.state();
                let b = self.state();
                let (s, e) = self.fragment(inner)?;
                self.eps(a, s);
                self.eps(e, s);
                self.eps(e, b);
                Ok((a, b))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::parse_policy;

    fn abc() -> Alphabet {
        Alphabet::new(["c2p", "p2p", "p2c"]).unwrap()
    }

    fn compile_str(text: &str, alphabet: &Alphabet) -> PolicyNfa {
        compile_nfa(&parse_policy(text, alphabet).unwrap(), alphabet).unwrap()
    }

    #[test]
    fn compiled_valley_free_accepts_mountains_only() {
        let nfa = compile_str("c2p* p2p? p2c*", &abc());
        assert!(nfa.accepts(&["c2p", "c2p", "p2p", "p2c"]));
        assert!(nfa.accepts::<&str>(&[]));
        assert!(!nfa.accepts(&["p2c", "c2p"]));
    }

    #[test]
    fn compiled_leaf_accepts_exactly_itself() {
        let alphabet = Alphabet::new(["a"]).unwrap();
        let nfa = compile_str("a", &alphabet);
        assert!(nfa.accepts(&["a"]));
        assert!(!nfa.accepts::<&str>(&[]));
        assert!(!nfa.accepts(&["a", "a"]));
        assert_eq!(nfa.accepting().len(), 1);
    }

    #[test]
    fn compiled_star() {
        let alphabet = Alphabet::new(["a", "b"]).unwrap();
        let nfa = compile_str("a*", &alphabet);
        assert!(nfa.accepts::<&str>(&[]));
        assert!(nfa.accepts(&["a"]));
        assert!(nfa.accepts(&["a", "a"]));
        assert!(!nfa.accepts(&["b"]));
    }

    /// Exhaustive agreement between the compiled NFA and the reference
    /// matcher on every string up to length 6.
    fn assert_language_agreement(text: &str, alphabet: &Alphabet, max_len: usize) {
        let expr = parse_policy(text, alphabet).unwrap();
        let nfa = compile_nfa(&expr, alphabet).unwrap();
        let symbols: Vec<&str> = alphabet.names().collect();
        let mut strings: Vec<Vec<&str>> = vec![vec![]];
        let mut frontier: Vec<Vec<&str>> = vec![vec![]];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for s in &frontier {
                for sym in &symbols {
                    let mut t = s.clone();
                    t.push(sym);
                    next.push(t);
                }
            }
            strings.extend(next.iter().cloned());
            frontier = next;
        }
        for s in &strings {
            assert_eq!(
                nfa.accepts(s),
                expr.matches(s),
                "disagreement for {text} on {s:?}"
            );
        }
    }

    #[test]
    fn compiler_agrees_with_reference_matcher_exhaustively() {
        let alphabet = abc();
        for text in [
            "c2p* p2p? p2c*",
            "c2p* p2p* p2c*",
            "(c2p|p2p|p2c)*",
            "c2p+ (p2p|p2c)?",
            "(c2p p2c)* p2p?",
        ] {
            assert_language_agreement(text, &alphabet, 6);
        }
        let ab = Alphabet::new(["a", "b"]).unwrap();
        for text in ["a", "a* b a*", "(a|b)+ a", "a? a? a?"] {
            assert_language_agreement(text, &ab, 6);
        }
    }

    #[test]
    fn normalize_merges_accepting_states() {
        let alphabet = Alphabet::new(["a", "b"]).unwrap();
        let nfa = PolicyNfa::from_indexed(
            alphabet,
            3,
            0,
            &[1, 2],
            &[(0, "a", 1), (0, "b", 2)],
        )
        .unwrap();
        let norm = nfa.normalize_terminals().unwrap();
        assert_eq!(norm.accepting().len(), 1);
        assert_eq!(norm.state_count(), 4);
        let qstar = norm.single_accepting().unwrap();
        assert_eq!(norm.state_name(qstar), "q*");
        let copied: Vec<Transition> = norm
            .transitions()
            .iter()
            .copied()
            .filter(|t| t.to == qstar)
            .collect();
        assert_eq!(copied.len(), 2);
        assert!(norm.accepts(&["a"]));
        assert!(norm.accepts(&["b"]));
        assert!(!norm.accepts::<&str>(&[]));
    }

    #[test]
    fn normalize_single_accepting_is_identity() {
        let alphabet = Alphabet::new(["a"]).unwrap();
        let nfa =
            PolicyNfa::from_indexed(alphabet, 2, 0, &[1], &[(0, "a", 1)]).unwrap();
        assert_eq!(nfa.normalize_terminals().unwrap(), nfa);
    }

    #[test]
    fn normalize_empty_accepting_errors() {
        let alphabet = Alphabet::new(["a"]).unwrap();
        let nfa =
            PolicyNfa::from_indexed(alphabet, 2, 0, &[], &[(0, "a", 1)]).unwrap();
        assert_eq!(nfa.normalize_terminals(), Err(Error::NoAcceptingState));
    }

    #[test]
    fn normalize_keeps_empty_string_when_start_accepts() {
        // q0 is accepting and |F| > 1: the ε-fix must keep ε in the language.
        let alphabet = Alphabet::new(["a"]).unwrap();
        let nfa = PolicyNfa::from_indexed(
            alphabet,
            2,
            0,
            &[0, 1],
            &[(0, "a", 1)],
        )
        .unwrap();
        let norm = nfa.normalize_terminals().unwrap();
        assert!(norm.accepts::<&str>(&[]));
        assert!(norm.accepts(&["a"]));
        assert!(!norm.accepts(&["a", "a"]));
    }

    #[test]
    fn intersect_with_universal_is_identity_on_language() {
        let alphabet = abc();
        let vf = compile_str("c2p* p2p? p2c*", &alphabet);
        let any = compile_str("(c2p|p2p|p2c)*", &alphabet);
        let both = vf.intersect(&any).unwrap();
        for s in [
            vec![],
            vec!["c2p", "p2c"],
            vec!["p2p", "p2p"],
            vec!["c2p", "p2p", "p2c"],
            vec!["p2c", "c2p"],
        ] {
            assert_eq!(both.accepts(&s), vf.accepts(&s), "string {s:?}");
        }
    }

    #[test]
    fn intersect_disjoint_is_empty() {
        let alphabet = Alphabet::new(["a", "b"]).unwrap();
        let a = compile_str("a", &alphabet);
        let b = compile_str("b", &alphabet);
        let both = a.intersect(&b).unwrap();
        assert!(!both.accepts(&["a"]));
        assert!(!both.accepts(&["b"]));
        assert!(!both.accepts::<&str>(&[]));
    }

    #[test]
    fn intersect_alphabet_mismatch() {
        let a = compile_str("a", &Alphabet::new(["a"]).unwrap());
        let b = compile_str("b", &Alphabet::new(["b"]).unwrap());
        assert!(matches!(
            a.intersect(&b),
            Err(Error::AlphabetMismatch(_))
        ));
    }

    #[test]
    fn text_format_roundtrip() {
        let text = "start: q0\naccept: q1 q2\nq0 a q1\nq0 b q2\nq1 eps q2\n";
        let nfa = PolicyNfa::from_text(text, None).unwrap();
        assert_eq!(nfa.state_count(), 3);
        assert_eq!(nfa.accepting().len(), 2);
        assert!(nfa.accepts(&["a"]));
        let reparsed = PolicyNfa::from_text(&nfa.to_text(), Some(nfa.alphabet().clone())).unwrap();
        assert_eq!(reparsed.to_text(), nfa.to_text());
    }

    #[test]
    fn text_format_errors() {
        assert!(matches!(
            PolicyNfa::from_text("accept: q0\n", None),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            PolicyNfa::from_text("start: q0\naccept: q0\nq0 a\n", None),
            Err(Error::ParseError { line: 3, .. })
        ));
    }
}
