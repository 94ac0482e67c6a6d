//! Synthetic instance generation: random labeled graphs, random NFAs (with
//! or without the per-symbol Cartesian guarantee), and scale-free AS-style
//! topologies. Used by cross-check suites and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::capacity::Capacity;
use crate::decompose::{is_cartesian, transitions_by_symbol};
use crate::graph::{Alphabet, LabeledDigraph};
use crate::policy::PolicyNfa;

/// Random directed multigraph without self-loops, all capacities 1.
/// Returns the graph plus two distinct endpoint nodes drawn from it.
pub fn random_graph<R: Rng>(
    rng: &mut R,
    max_nodes: usize,
    max_edges: usize,
    alphabet: &Alphabet,
) -> (LabeledDigraph, String, String) {
    assert!(max_nodes >= 2);
    let n = rng.gen_range(2..=max_nodes);
    let m = rng.gen_range(1..=max_edges);
    let symbols: Vec<&str> = alphabet.names().collect();
    let mut rows = Vec::with_capacity(m);
    for _ in 0..m {
        let src = rng.gen_range(0..n);
        let mut dst = rng.gen_range(0..n - 1);
        if dst >= src {
            dst += 1;
        }
        let label = symbols[rng.gen_range(0..symbols.len())];
        rows.push((
            format!("n{src}"),
            format!("n{dst}"),
            label.to_string(),
            Capacity::from_integer(1),
        ));
    }
    let g = LabeledDigraph::build(alphabet.clone(), &rows).expect("well-formed rows");
    // Endpoints are existing nodes (an edge between distinct nodes
    // guarantees at least two); disconnected pairs are valid instances.
    let v1 = rng.gen_range(0..g.node_count());
    let mut vn = rng.gen_range(0..g.node_count() - 1);
    if vn >= v1 {
        vn += 1;
    }
    let source = g.node_name(v1).to_string();
    let sink = g.node_name(vn).to_string();
    (g, source, sink)
}

/// Random NFA. When `cartesian` is set, every per-symbol relation is built
/// as `Q'_s × Q''_s` (possibly empty), so the instance satisfies the
/// exactness condition; otherwise pairs are sampled independently.
/// ε-transitions are sprinkled in either way; the accepting set is a random
/// nonempty subset.
pub fn random_nfa<R: Rng>(
    rng: &mut R,
    max_states: u32,
    alphabet: &Alphabet,
    cartesian: bool,
) -> PolicyNfa {
    let n = rng.gen_range(1..=max_states);
    let mut transitions: Vec<(u32, String, u32)> = Vec::new();
    for (_, name) in alphabet.iter() {
        if cartesian {
            if rng.gen_bool(0.25) {
                continue; // no transitions on this symbol
            }
            let pick = |rng: &mut R| -> Vec<u32> {
                let size = rng.gen_range(1..=n);
                let mut states: Vec<u32> = (0..n).collect();
                states.shuffle(rng);
                states.truncate(size as usize);
                states
            };
            let from_set = pick(rng);
            let to_set = pick(rng);
            for &from in &from_set {
                for &to in &to_set {
                    transitions.push((from, name.to_string(), to));
                }
            }
        } else {
            for from in 0..n {
                for to in 0..n {
                    if rng.gen_bool(0.2) {
                        transitions.push((from, name.to_string(), to));
                    }
                }
            }
        }
    }
    for from in 0..n {
        for to in 0..n {
            if rng.gen_bool(0.06) {
                transitions.push((from, "eps".to_string(), to));
            }
        }
    }
    let start = rng.gen_range(0..n);
    let mut accepting: Vec<u32> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
    if accepting.is_empty() {
        accepting.push(rng.gen_range(0..n));
    }
    PolicyNfa::from_indexed(alphabet.clone(), n, start, &accepting, &transitions)
        .expect("indices in range")
}

/// True when every per-symbol relation of the NFA is a Cartesian product.
pub fn all_relations_cartesian(nfa: &PolicyNfa) -> bool {
    nfa.alphabet()
        .iter()
        .all(|(sym, _)| is_cartesian(&transitions_by_symbol(nfa, Some(sym))))
}

/// Scale-free AS-style topology via preferential attachment: a small p2p
/// clique of roots, every later node buying transit from `attachments`
/// degree-weighted providers, plus a few extra peerings between the
/// highest-degree nodes. Produces exactly `2 * relationships` directed
/// edges, all capacity 1, labels in `{c2p, p2p, p2c}`.
pub fn scale_free_as_graph<R: Rng>(
    rng: &mut R,
    nodes: usize,
    attachments: usize,
) -> LabeledDigraph {
    assert!(nodes >= 4 && attachments >= 1);
    #[derive(Default)]
    struct TopoBuilder {
        rows: Vec<(String, String, String, Capacity)>,
        // Degree-proportional sampling pool: every relationship pushes
        // both endpoints.
        pool: Vec<usize>,
        // At most one relationship per unordered pair.
        linked: std::collections::BTreeSet<(usize, usize)>,
    }
    impl TopoBuilder {
        fn peer(&mut self, a: usize, b: usize) {
            let unit = Capacity::from_integer(1);
            self.linked.insert((a.min(b), a.max(b)));
            self.rows
                .push((format!("n{a}"), format!("n{b}"), "p2p".to_string(), unit));
            self.rows
                .push((format!("n{b}"), format!("n{a}"), "p2p".to_string(), unit));
            self.pool.push(a);
            self.pool.push(b);
        }
        fn transit(&mut self, customer: usize, provider: usize) {
            let unit = Capacity::from_integer(1);
            self.linked
                .insert((customer.min(provider), customer.max(provider)));
            self.rows.push((
                format!("n{customer}"),
                format!("n{provider}"),
                "c2p".to_string(),
                unit,
            ));
            self.rows.push((
                format!("n{provider}"),
                format!("n{customer}"),
                "p2c".to_string(),
                unit,
            ));
            self.pool.push(customer);
            self.pool.push(provider);
        }
    }

    let mut b = TopoBuilder::default();
    b.peer(0, 1);
    b.peer(0, 2);
    b.peer(1, 2);
    for node in 3..nodes {
        let mut providers: Vec<usize> = Vec::with_capacity(attachments);
        while providers.len() < attachments {
            let candidate = b.pool[rng.gen_range(0..b.pool.len())];
            if candidate != node && !providers.contains(&candidate) {
                providers.push(candidate);
            }
        }
        for p in providers {
            b.transit(node, p);
        }
    }
    // Three extra peerings between early (high-degree) nodes, skipping
    // pairs that already have a relationship.
    let mut extra = 0;
    'outer: for i in 0..nodes {
        for j in (i + 1)..nodes {
            if extra == 3 {
                break 'outer;
            }
            if !b.linked.contains(&(i, j)) {
                b.peer(i, j);
                extra += 1;
            }
        }
    }

    LabeledDigraph::build(crate::ingest::as_alphabet(), &b.rows).expect("well-formed rows")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_graph_has_distinct_endpoints() {
        let alphabet = Alphabet::new(["a", "b", "c"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (g, v1, vn) = random_graph(&mut rng, 8, 14, &alphabet);
            assert_ne!(v1, vn);
            assert!(g.node_index(&v1).is_some());
            assert!(g.node_index(&vn).is_some());
            assert!(g.edge_count() <= 15);
        }
    }

    #[test]
    fn cartesian_nfas_pass_the_condition() {
        let alphabet = Alphabet::new(["a", "b", "c"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let nfa = random_nfa(&mut rng, 5, &alphabet, true);
            assert!(all_relations_cartesian(&nfa));
            // The condition survives terminal normalization.
            let norm = nfa.normalize_terminals().unwrap();
            assert!(all_relations_cartesian(&norm));
        }
    }

    #[test]
    fn scale_free_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = scale_free_as_graph(&mut rng, 100, 2);
        assert_eq!(g.node_count(), 100);
        assert_eq!(g.edge_count(), 2 * (3 + 2 * 97 + 3));
    }
}
