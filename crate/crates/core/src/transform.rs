//! The product construction: augment the policy NFA with aggregator states
//! per decomposition block, then take per-symbol tensor products of the
//! graph with the augmented transition relations, wire ε-edges inside every
//! graph node, and assign the dual (upper/lower) capacity functions.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::capacity::Capacity;
use crate::decompose::{decompose, transitions_by_symbol, TransitionDecomposition};
use crate::error::{Error, Result};
use crate::graph::{LabeledDigraph, Symbol};
use crate::policy::{PolicyNfa, StateId};

/// Which capacity function of the transformed graph to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Upper,
    Lower,
}

/// One decomposition block after aggregation: the mapped relation collapses
/// to the single endpoint pair `(from, to)`, with aggregator states fanning
/// in/out over ε where a side had more than one state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregatedBlock {
    pub from: StateId,
    pub to: StateId,
    pub in_aggregator: Option<StateId>,
    pub out_aggregator: Option<StateId>,
    pub source_from: BTreeSet<StateId>,
    pub source_to: BTreeSet<StateId>,
}

/// The policy NFA after terminal normalization and aggregator augmentation.
#[derive(Debug, Clone)]
pub struct AugmentedNfa {
    base: PolicyNfa,
    state_names: Vec<String>,
    start: StateId,
    terminal: StateId,
    /// Aggregated blocks per symbol, indexed by the NFA alphabet.
    symbol_blocks: Vec<Vec<AggregatedBlock>>,
    /// Original ε-transition pairs plus aggregator fan-in/fan-out pairs.
    epsilon_pairs: Vec<(StateId, StateId)>,
    added_epsilon_pairs: Vec<(StateId, StateId)>,
}

impl AugmentedNfa {
    pub fn base(&self) -> &PolicyNfa {
        &self.base
    }

    pub fn state_count(&self) -> usize {
        self.state_names.len()
    }

    pub fn base_state_count(&self) -> usize {
        self.base.state_count()
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.state_names[q.0 as usize]
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn terminal(&self) -> StateId {
        self.terminal
    }

    pub fn blocks_for(&self, sym: Symbol) -> &[AggregatedBlock] {
        &self.symbol_blocks[sym.0 as usize]
    }

    /// `n_s` per symbol, in alphabet order, as `(symbol name, block count)`.
    pub fn block_counts(&self) -> Vec<(String, usize)> {
        self.base
            .alphabet()
            .iter()
            .map(|(sym, name)| (name.to_string(), self.symbol_blocks[sym.0 as usize].len()))
            .collect()
    }

    /// All per-symbol relations decompose into at most one block each, so
    /// the lower and upper capacity functions coincide.
    pub fn all_exact(&self) -> bool {
        self.symbol_blocks.iter().all(|b| b.len() <= 1)
    }

    pub fn epsilon_pairs(&self) -> &[(StateId, StateId)] {
        &self.epsilon_pairs
    }

    pub fn added_epsilon_pairs(&self) -> &[(StateId, StateId)] {
        &self.added_epsilon_pairs
    }
}

/// Convenience: decompositions for every symbol of the NFA alphabet.
pub fn decompose_all(nfa: &PolicyNfa) -> Vec<TransitionDecomposition> {
    nfa.alphabet()
        .iter()
        .map(|(sym, _)| decompose(&transitions_by_symbol(nfa, Some(sym))))
        .collect()
}

/// Adds aggregator states per decomposition block. The input must already
/// have a single terminal state; `decomps` must line up with the NFA
/// alphabet (one decomposition per symbol, in order).
pub fn augment_aggregators(
    nfa: &PolicyNfa,
    decomps: &[TransitionDecomposition],
) -> Result<AugmentedNfa> {
    let terminal = nfa
        .single_accepting()
        .ok_or_else(|| Error::MultipleTerminals(nfa.accepting().len()))?;
    if decomps.len() != nfa.alphabet().len() {
        return Err(Error::InvalidInput(format!(
            "expected {} per-symbol decompositions, got {}",
            nfa.alphabet().len(),
            decomps.len()
        )));
    }
    let mut state_names: Vec<String> = nfa.state_names().to_vec();
    let mut epsilon_pairs: BTreeSet<(StateId, StateId)> = nfa.epsilon_pairs();
    let mut added: Vec<(StateId, StateId)> = Vec::new();
    let mut symbol_blocks: Vec<Vec<AggregatedBlock>> = Vec::new();

    for (sym, name) in nfa.alphabet().iter() {
        let dec = &decomps[sym.0 as usize];
        if dec.label != Some(sym) {
            return Err(Error::InvalidInput(format!(
                "decomposition for `{name}` is out of order"
            )));
        }
        let mut blocks = Vec::with_capacity(dec.blocks.len());
        for (k, block) in dec.blocks.iter().enumerate() {
            let mut in_aggregator = None;
            let mut out_aggregator = None;
            let from = if block.from.len() == 1 {
                *block.from.iter().next().expect("singleton")
            } else {
                let q = StateId(state_names.len() as u32);
                state_names.push(format!("{name}'{k}"));
                for &p in &block.from {
                    epsilon_pairs.insert((p, q));
                    added.push((p, q));
                }
                in_aggregator = Some(q);
                q
            };
            let to = if block.to.len() == 1 {
                *block.to.iter().next().expect("singleton")
            } else {
                let q = StateId(state_names.len() as u32);
                state_names.push(format!("{name}''{k}"));
                for &p in &block.to {
                    epsilon_pairs.insert((q, p));
                    added.push((q, p));
                }
                out_aggregator = Some(q);
                q
            };
            blocks.push(AggregatedBlock {
                from,
                to,
                in_aggregator,
                out_aggregator,
                source_from: block.from.clone(),
                source_to: block.to.clone(),
            });
        }
        symbol_blocks.push(blocks);
    }

    Ok(AugmentedNfa {
        base: nfa.clone(),
        state_names,
        start: nfa.start(),
        terminal,
        symbol_blocks,
        epsilon_pairs: epsilon_pairs.into_iter().collect(),
        added_epsilon_pairs: added,
    })
}

/// Where a transformed edge came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Image of graph edge `edge` under decomposition block `block` of its
    /// label's relation.
    Mapped {
        edge: crate::graph::EdgeId,
        block: usize,
    },
    /// Policy-internal ε-edge; lives inside a single graph node.
    Epsilon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformedEdge {
    pub from: usize,
    pub to: usize,
    pub provenance: Provenance,
    pub cap_upper: Capacity,
    pub cap_lower: Capacity,
}

impl TransformedEdge {
    pub fn capacity(&self, bound: Bound) -> Capacity {
        match bound {
            Bound::Upper => self.cap_upper,
            Bound::Lower => self.cap_lower,
        }
    }
}

/// The product graph. Nodes are `(graph node, automaton state)` pairs;
/// edges carry provenance back to the source graph plus both capacity
/// functions.
#[derive(Debug, Clone)]
pub struct TransformedGraph {
    /// `(graph node index, automaton state index)` per transformed node.
    node_pairs: Vec<(u32, u32)>,
    graph_node_names: Vec<String>,
    state_names: Vec<String>,
    edges: Vec<TransformedEdge>,
    source: usize,
    sink: usize,
    block_counts: Vec<(String, usize)>,
    all_exact: bool,
}

impl TransformedGraph {
    pub fn node_count(&self) -> usize {
        self.node_pairs.len()
    }

    pub fn edges(&self) -> &[TransformedEdge] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn node_pair(&self, node: usize) -> (u32, u32) {
        self.node_pairs[node]
    }

    /// `v@q` display name of a transformed node.
    pub fn node_name(&self, node: usize) -> String {
        let (v, q) = self.node_pairs[node];
        format!(
            "{}@{}",
            self.graph_node_names[v as usize], self.state_names[q as usize]
        )
    }

    /// Per-symbol `(name, n_s)` pairs recorded at transform time.
    pub fn block_counts(&self) -> &[(String, usize)] {
        &self.block_counts
    }

    /// All decompositions were exact, so `cap_upper ≡ cap_lower`.
    pub fn all_exact(&self) -> bool {
        self.all_exact
    }

    pub fn mapped_edge_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| matches!(e.provenance, Provenance::Mapped { .. }))
            .count()
    }

    pub fn epsilon_edge_count(&self) -> usize {
        self.edges.len() - self.mapped_edge_count()
    }

    /// Emits the transformed graph in the graph text format with `v@q` node
    /// names. ε-edges are written with the pseudo-label `eps`.
    pub fn to_graph_text(&self, g: &LabeledDigraph, bound: Bound) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let label = match e.provenance {
                Provenance::Mapped { edge, .. } => g.alphabet().name(g.edge(edge).label),
                Provenance::Epsilon => "eps",
            };
            let _ = writeln!(
                out,
                "{}|{}|{}|{}",
                self.node_name(e.from),
                self.node_name(e.to),
                label,
                e.capacity(bound)
            );
        }
        out
    }

    /// Provenance sidecar: one line per transformed edge,
    /// `index|from|to|origin|cap_upper|cap_lower`.
    pub fn provenance_text(&self, g: &LabeledDigraph) -> String {
        let mut out = String::new();
        for (i, e) in self.edges.iter().enumerate() {
            let origin = match e.provenance {
                Provenance::Mapped { edge, block } => {
                    format!("edge {} block {} ({})", edge.0, block, g.describe_edge(edge))
                }
                Provenance::Epsilon => "eps".to_string(),
            };
            let _ = writeln!(
                out,
                "{}|{}|{}|{}|{}|{}",
                i,
                self.node_name(e.from),
                self.node_name(e.to),
                origin,
                e.cap_upper,
                e.cap_lower
            );
        }
        out
    }
}

/// Builds the product graph of `g` with the augmented automaton, with
/// source `(v1, q0)` and sink `(vn, q*)`.
///
/// The node set is the full product `V × Q_aug`. Mapped edges follow the
/// aggregated relations; every ε-pair (original or aggregator) is
/// instantiated inside every graph node with unbounded capacity.
pub fn tensor_transform(
    g: &LabeledDigraph,
    aug: &AugmentedNfa,
    v1: &str,
    vn: &str,
) -> Result<TransformedGraph> {
    let source_node = g.require_node(v1)?;
    let sink_node = g.require_node(vn)?;
    if source_node == sink_node {
        return Err(Error::SourceEqualsSink(v1.to_string()));
    }
    if !g.alphabet().subset_of(aug.base().alphabet()) {
        return Err(Error::AlphabetMismatch(format!(
            "graph alphabet {{{}}} is not contained in the policy alphabet {{{}}}",
            g.alphabet().names().collect::<Vec<_>>().join(","),
            aug.base().alphabet().names().collect::<Vec<_>>().join(",")
        )));
    }
    // Graph symbols resolved into the (possibly larger) NFA alphabet.
    let sym_map: Vec<Symbol> = g
        .alphabet()
        .iter()
        .map(|(_, name)| aug.base().alphabet().symbol(name).expect("subset checked"))
        .collect();

    let num_states = aug.state_count();
    let node_of = |v: usize, q: StateId| v * num_states + q.0 as usize;

    let mut node_pairs = Vec::with_capacity(g.node_count() * num_states);
    for v in 0..g.node_count() as u32 {
        for q in 0..num_states as u32 {
            node_pairs.push((v, q));
        }
    }

    let mut edges = Vec::new();
    for (id, e) in g.edges() {
        let nfa_sym = sym_map[e.label.0 as usize];
        let blocks = aug.blocks_for(nfa_sym);
        let n_s = blocks.len();
        for (k, block) in blocks.iter().enumerate() {
            edges.push(TransformedEdge {
                from: node_of(e.src as usize, block.from),
                to: node_of(e.dst as usize, block.to),
                provenance: Provenance::Mapped { edge: id, block: k },
                cap_upper: e.capacity,
                cap_lower: e.capacity.div_by(n_s),
            });
        }
    }
    for v in 0..g.node_count() {
        for &(q1, q2) in aug.epsilon_pairs() {
            edges.push(TransformedEdge {
                from: node_of(v, q1),
                to: node_of(v, q2),
                provenance: Provenance::Epsilon,
                cap_upper: Capacity::Unbounded,
                cap_lower: Capacity::Unbounded,
            });
        }
    }

    Ok(TransformedGraph {
        node_pairs,
        graph_node_names: g.node_names().map(str::to_string).collect(),
        state_names: (0..num_states as u32)
            .map(|q| aug.state_name(StateId(q)).to_string())
            .collect(),
        edges,
        source: node_of(source_node, aug.start()),
        sink: node_of(sink_node, aug.terminal()),
        block_counts: aug.block_counts(),
        all_exact: aug.all_exact(),
    })
}

/// Drops nodes that cannot lie on any source→sink path (not forward
/// reachable from the source or not backward reachable from the sink).
/// Source and sink are always kept. Min-cut preserving and idempotent.
pub fn prune_unreachable(tg: &TransformedGraph) -> TransformedGraph {
    let n = tg.node_count();
    let mut fwd_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut bwd_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &tg.edges {
        fwd_adj[e.from].push(e.to);
        bwd_adj[e.to].push(e.from);
    }
    let reach = |adj: &Vec<Vec<usize>>, root: usize| -> Vec<bool> {
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    };
    let fwd = reach(&fwd_adj, tg.source);
    let bwd = reach(&bwd_adj, tg.sink);

    let mut keep = vec![false; n];
    for v in 0..n {
        keep[v] = fwd[v] && bwd[v];
    }
    keep[tg.source] = true;
    keep[tg.sink] = true;

    let mut remap = vec![usize::MAX; n];
    let mut node_pairs = Vec::new();
    for v in 0..n {
        if keep[v] {
            remap[v] = node_pairs.len();
            node_pairs.push(tg.node_pairs[v]);
        }
    }
    let edges = tg
        .edges
        .iter()
        .filter(|e| fwd[e.from] && bwd[e.from] && fwd[e.to] && bwd[e.to])
        .map(|e| TransformedEdge {
            from: remap[e.from],
            to: remap[e.to],
            ..e.clone()
        })
        .collect();

    TransformedGraph {
        node_pairs,
        graph_node_names: tg.graph_node_names.clone(),
        state_names: tg.state_names.clone(),
        edges,
        source: remap[tg.source],
        sink: remap[tg.sink],
        block_counts: tg.block_counts.clone(),
        all_exact: tg.all_exact,
    }
}
