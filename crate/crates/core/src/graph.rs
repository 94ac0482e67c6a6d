//! Labeled directed multigraph with exact rational capacities.
//!
//! Nodes are opaque strings, edges carry a label drawn from a finite
//! alphabet and a positive (or unbounded) capacity. Parallel edges are
//! allowed and kept distinct through [`EdgeId`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use indexmap::IndexSet;

use crate::capacity::Capacity;
use crate::error::{Error, Result};

/// Spellings reserved for the epsilon symbol; never valid as edge labels.
pub const EPSILON_SPELLINGS: &[&str] = &["eps", "ε"];

/// Index of a symbol within an [`Alphabet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(pub u32);

/// Finite set of edge-label symbols. Epsilon is reserved and rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: IndexSet<String>,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = IndexSet::new();
        for s in symbols {
            let s = s.into();
            if EPSILON_SPELLINGS.contains(&s.as_str()) {
                return Err(Error::ReservedEpsilonLabel(s));
            }
            set.insert(s);
        }
        Ok(Alphabet { symbols: set })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, name: &str) -> Option<Symbol> {
        self.symbols.get_index_of(name).map(|i| Symbol(i as u32))
    }

    pub fn require(&self, name: &str) -> Result<Symbol> {
        self.symbol(name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn name(&self, sym: Symbol) -> &str {
        &self.symbols[sym.0 as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, &str)> {
        self.symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (Symbol(i as u32), s.as_str()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().map(|s| s.as_str())
    }

    /// True when both alphabets contain the same symbol set (order ignored).
    pub fn same_symbols(&self, other: &Alphabet) -> bool {
        self.symbols.len() == other.symbols.len()
            && self.symbols.iter().all(|s| other.symbols.contains(s))
    }

    /// True when every symbol of `self` is present in `other`.
    pub fn subset_of(&self, other: &Alphabet) -> bool {
        self.symbols.iter().all(|s| other.symbols.contains(s))
    }

    /// Union preserving the order of `self` then new symbols of `other`.
    pub fn union(&self, other: &Alphabet) -> Alphabet {
        let mut symbols = self.symbols.clone();
        for s in &other.symbols {
            symbols.insert(s.clone());
        }
        Alphabet { symbols }
    }
}

/// Stable ordinal of an edge within its graph. Subgraph views and the
/// transform reference edges of the parent graph through these ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

/// Rename map produced by node splitting: `original -> (in half, out half)`.
pub type SplitRenameMap = BTreeMap<String, (String, String)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub label: Symbol,
    pub capacity: Capacity,
}

/// Directed labeled multigraph; immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDigraph {
    alphabet: Alphabet,
    nodes: IndexSet<String>,
    edges: Vec<Edge>,
}

impl LabeledDigraph {
    /// Builds a graph from `(src, dst, label, capacity)` tuples. Nodes are
    /// inferred as the union of edge endpoints, in order of appearance.
    pub fn build<S: AsRef<str>>(
        alphabet: Alphabet,
        edges: &[(S, S, S, Capacity)],
    ) -> Result<Self> {
        let mut graph = LabeledDigraph {
            alphabet,
            nodes: IndexSet::new(),
            edges: Vec::with_capacity(edges.len()),
        };
        for (src, dst, label, capacity) in edges {
            graph.push_edge(src.as_ref(), dst.as_ref(), label.as_ref(), *capacity)?;
        }
        Ok(graph)
    }

    fn push_edge(&mut self, src: &str, dst: &str, label: &str, capacity: Capacity) -> Result<()> {
        if EPSILON_SPELLINGS.contains(&label) {
            return Err(Error::ReservedEpsilonLabel(label.to_string()));
        }
        let label = self.alphabet.require(label)?;
        if !capacity.is_positive() {
            return Err(Error::NonPositiveCapacity {
                src: src.to_string(),
                dst: dst.to_string(),
            });
        }
        let src = self.nodes.insert_full(src.to_string()).0 as u32;
        let dst = self.nodes.insert_full(dst.to_string()).0 as u32;
        self.edges.push(Edge {
            src,
            dst,
            label,
            capacity,
        });
        Ok(())
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|s| s.as_str())
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.get_index_of(name)
    }

    pub fn require_node(&self, name: &str) -> Result<usize> {
        self.node_index(name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn node_name(&self, index: usize) -> &str {
        &self.nodes[index]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0 as usize]
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| (EdgeId(i as u32), e))
    }

    /// Human-readable `src -label-> dst` form, used by reports.
    pub fn describe_edge(&self, id: EdgeId) -> String {
        let e = self.edge(id);
        format!(
            "{} -{}-> {}",
            self.node_name(e.src as usize),
            self.alphabet.name(e.label),
            self.node_name(e.dst as usize)
        )
    }

    /// Ids of all edges labeled `label`: the edge set of the label-restricted
    /// subgraph view (the node set is shared with the parent).
    pub fn subgraph_by_label(&self, label: &str) -> Result<Vec<EdgeId>> {
        let sym = self.alphabet.require(label)?;
        Ok(self.edges_with_symbol(sym))
    }

    pub fn edges_with_symbol(&self, sym: Symbol) -> Vec<EdgeId> {
        self.edges()
            .filter(|(_, e)| e.label == sym)
            .map(|(id, _)| id)
            .collect()
    }

    /// Splits each node listed in `spec` into an `_in`/`_out` half pair
    /// joined by a fresh edge carrying the given label and capacity. All
    /// original in-edges are redirected to the `_in` half and all out-edges
    /// leave the `_out` half. Returns the new graph together with the
    /// rename map `original -> (in half, out half)`.
    pub fn split_nodes(
        &self,
        spec: &BTreeMap<String, (String, Capacity)>,
    ) -> Result<(LabeledDigraph, SplitRenameMap)> {
        for (node, (label, capacity)) in spec {
            self.require_node(node)?;
            self.alphabet.require(label)?;
            if !capacity.is_positive() {
                return Err(Error::NonPositiveCapacity {
                    src: node.clone(),
                    dst: node.clone(),
                });
            }
        }
        let mut rename = BTreeMap::new();
        for node in spec.keys() {
            let halves = (format!("{node}_in"), format!("{node}_out"));
            for half in [&halves.0, &halves.1] {
                if self.nodes.contains(half) {
                    return Err(Error::DuplicateNode(half.clone()));
                }
            }
            rename.insert(node.clone(), halves);
        }

        let in_name = |name: &str| -> String {
            rename
                .get(name)
                .map(|(i, _)| i.clone())
                .unwrap_or_else(|| name.to_string())
        };
        let out_name = |name: &str| -> String {
            rename
                .get(name)
                .map(|(_, o)| o.clone())
                .unwrap_or_else(|| name.to_string())
        };

        let mut edges: Vec<(String, String, String, Capacity)> = Vec::new();
        // Keep original node order: seed edges for split pairs after the
        // originals so ids of untouched edges stay in relative order.
        for e in &self.edges {
            let src = self.node_name(e.src as usize);
            let dst = self.node_name(e.dst as usize);
            edges.push((
                out_name(src),
                in_name(dst),
                self.alphabet.name(e.label).to_string(),
                e.capacity,
            ));
        }
        for (node, (label, capacity)) in spec {
            let (in_half, out_half) = &rename[node];
            edges.push((in_half.clone(), out_half.clone(), label.clone(), *capacity));
        }
        let graph = LabeledDigraph::build(self.alphabet.clone(), &edges)?;
        Ok((graph, rename))
    }

    /// New graph keeping only edges for which `keep` returns true.
    /// Edge ids are reassigned; node set is rebuilt from the kept edges
    /// plus `retain_nodes`.
    pub fn filter_edges<F>(&self, retain_nodes: &[&str], keep: F) -> LabeledDigraph
    where
        F: Fn(EdgeId, &Edge) -> bool,
    {
        let mut nodes = IndexSet::new();
        for name in retain_nodes {
            nodes.insert(name.to_string());
        }
        let mut edges = Vec::new();
        for (id, e) in self.edges() {
            if keep(id, e) {
                let src = nodes.insert_full(self.node_name(e.src as usize).to_string()).0;
                let dst = nodes.insert_full(self.node_name(e.dst as usize).to_string()).0;
                edges.push(Edge {
                    src: src as u32,
                    dst: dst as u32,
                    label: e.label,
                    capacity: e.capacity,
                });
            }
        }
        LabeledDigraph {
            alphabet: self.alphabet.clone(),
            nodes,
            edges,
        }
    }

    /// Same structure with every capacity set to 1 (path-diversity mode).
    pub fn with_unit_capacities(&self) -> LabeledDigraph {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.capacity = Capacity::from_integer(1);
        }
        g
    }

    /// Same structure with every finite capacity multiplied by `factor`.
    pub fn scale_capacities(&self, factor: crate::capacity::Rational) -> LabeledDigraph {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.capacity = e.capacity.scale(factor);
        }
        g
    }

    /// Parses the one-edge-per-line text format `src|dst|label|capacity`.
    /// `#` starts a comment, blank lines are skipped, capacity `inf` is the
    /// unbounded sentinel. With `alphabet = None` the alphabet is inferred
    /// from the labels present, in order of first appearance.
    pub fn from_text(text: &str, alphabet: Option<Alphabet>) -> Result<Self> {
        let mut rows: Vec<(String, String, String, Capacity)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('|').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::ParseError {
                    line: lineno + 1,
                    reason: format!(
                        "expected `src|dst|label|capacity`, got {} field(s)",
                        fields.len()
                    ),
                });
            }
            if fields.iter().any(|f| f.is_empty()) {
                return Err(Error::ParseError {
                    line: lineno + 1,
                    reason: "empty field".to_string(),
                });
            }
            let capacity: Capacity = fields[3].parse().map_err(|e| Error::ParseError {
                line: lineno + 1,
                reason: format!("{e}"),
            })?;
            rows.push((
                fields[0].to_string(),
                fields[1].to_string(),
                fields[2].to_string(),
                capacity,
            ));
        }
        let alphabet = match alphabet {
            Some(a) => a,
            None => {
                let mut labels: IndexSet<&str> = IndexSet::new();
                for (_, _, label, _) in &rows {
                    labels.insert(label.as_str());
                }
                Alphabet::new(labels)?
            }
        };
        LabeledDigraph::build(alphabet, &rows)
    }

    /// Inverse of [`LabeledDigraph::from_text`], one edge per line in id order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (_, e) in self.edges() {
            let _ = writeln!(
                out,
                "{}|{}|{}|{}",
                self.node_name(e.src as usize),
                self.node_name(e.dst as usize),
                self.alphabet.name(e.label),
                e.capacity
            );
        }
        out
    }
}
