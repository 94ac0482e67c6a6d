//! Exact maximum flow / minimum cut over transformed graphs, the
//! lower/upper bound pair, and flow decomposition into policy-compliant
//! paths projected back onto the original graph.
//!
//! Capacities are exact rationals with an unbounded sentinel. Before the
//! flow run every capacity is scaled by the lcm of the denominators, so the
//! inner loop works on integers; the resulting value is divided back and
//! reported as an exact rational. Unbounded edges get a sentinel capacity
//! larger than the sum of all finite ones, which no s-t cut can prefer.

use std::collections::{BTreeMap, VecDeque};

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::capacity::{Capacity, Rational};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, LabeledDigraph};
use crate::policy::PolicyNfa;
use crate::transform::{
    augment_aggregators, decompose_all, prune_unreachable, tensor_transform, Bound, Provenance,
    TransformedGraph,
};

/// A maximum flow on a transformed graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowResult {
    pub value: Rational,
    /// Flow per transformed edge, indexed like [`TransformedGraph::edges`].
    pub edge_flows: Vec<Rational>,
}

/// One realizing path in the original graph with its assigned flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathFlow {
    pub edges: Vec<EdgeId>,
    pub flow: Rational,
}

/// Lower/upper bounds on the policy-compliant min-cut with the exactness
/// certificate and the realizing paths (from the upper-bound flow).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutReport {
    pub lower: Rational,
    pub upper: Rational,
    /// True when every per-symbol relation decomposed into at most one
    /// block, which forces `lower == upper` (the certified-exact case).
    pub exact: bool,
    pub paths: Vec<PathFlow>,
    pub policy: String,
    pub source: String,
    pub sink: String,
    /// `n_s` per symbol, in alphabet order.
    pub block_counts: Vec<(String, usize)>,
}

impl CutReport {
    /// Renders a path as `A -c2p-> B -p2c-> C`.
    pub fn describe_path(&self, g: &LabeledDigraph, path: &PathFlow) -> String {
        let mut out = String::new();
        for (i, id) in path.edges.iter().enumerate() {
            let e = g.edge(*id);
            if i == 0 {
                out.push_str(g.node_name(e.src as usize));
            }
            out.push_str(&format!(
                " -{}-> {}",
                g.alphabet().name(e.label),
                g.node_name(e.dst as usize)
            ));
        }
        out
    }
}

fn checked_lcm(a: i128, b: i128) -> Result<i128> {
    let g = a.gcd(&b);
    (a / g)
        .checked_mul(b)
        .ok_or_else(|| Error::NumericOverflow("combining capacity denominators".to_string()))
}

/// Maximum flow under the chosen capacity function. Deterministic given the
/// transformed graph's edge order.
pub fn max_flow(tg: &TransformedGraph, bound: Bound) -> Result<FlowResult> {
    let caps: Vec<Capacity> = tg.edges().iter().map(|e| e.capacity(bound)).collect();

    let mut scale: i128 = 1;
    for c in &caps {
        if let Capacity::Finite(r) = c {
            scale = checked_lcm(scale, *r.denom())?;
        }
    }
    let mut total: i128 = 0;
    let mut scaled: Vec<Option<i128>> = Vec::with_capacity(caps.len());
    for c in &caps {
        match c {
            Capacity::Finite(r) => {
                let v = r
                    .numer()
                    .checked_mul(scale / r.denom())
                    .ok_or_else(|| Error::NumericOverflow("scaling capacities".to_string()))?;
                total = total
                    .checked_add(v)
                    .ok_or_else(|| Error::NumericOverflow("summing capacities".to_string()))?;
                scaled.push(Some(v));
            }
            Capacity::Unbounded => scaled.push(None),
        }
    }
    let infinity = total + 1;

    let mut net = Dinic::new(tg.node_count());
    for (e, cap) in tg.edges().iter().zip(&scaled) {
        net.add_edge(e.from, e.to, cap.unwrap_or(infinity));
    }
    let value = net.run(tg.source(), tg.sink());
    if value >= infinity {
        return Err(Error::UnboundedFlow);
    }
    let denom = Rational::from_integer(scale);
    let edge_flows = (0..tg.edges().len())
        .map(|i| Rational::from_integer(net.flow_on(i)) / denom)
        .collect();
    Ok(FlowResult {
        value: Rational::from_integer(value) / denom,
        edge_flows,
    })
}

/// Residual-graph max flow with BFS layering and current-arc advance
/// (iterative, so deep level graphs cannot overflow the stack).
struct Dinic {
    n: usize,
    to: Vec<usize>,
    cap: Vec<i128>,
    initial: Vec<i128>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic {
            n,
            to: Vec::new(),
            cap: Vec::new(),
            initial: Vec::new(),
            adj: vec![Vec::new(); n],
            level: vec![-1; n],
            iter: vec![0; n],
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: i128) {
        let id = self.to.len();
        self.to.push(v);
        self.cap.push(c);
        self.initial.push(c);
        self.adj[u].push(id);
        self.to.push(u);
        self.cap.push(0);
        self.initial.push(0);
        self.adj[v].push(id + 1);
    }

    /// Net flow pushed through the i-th added forward edge.
    fn flow_on(&self, i: usize) -> i128 {
        self.initial[2 * i] - self.cap[2 * i]
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &eid in &self.adj[u] {
                let v = self.to[eid];
                if self.cap[eid] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    /// One augmenting path within the current level graph, or 0.
    fn augment(&mut self, s: usize, t: usize) -> i128 {
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let bottleneck = path.iter().map(|&e| self.cap[e]).min().expect("s != t");
                for &e in &path {
                    self.cap[e] -= bottleneck;
                    self.cap[e ^ 1] += bottleneck;
                }
                return bottleneck;
            }
            let mut advanced = false;
            while self.iter[u] < self.adj[u].len() {
                let eid = self.adj[u][self.iter[u]];
                let v = self.to[eid];
                if self.cap[eid] > 0 && self.level[v] == self.level[u] + 1 {
                    path.push(eid);
                    u = v;
                    advanced = true;
                    break;
                }
                self.iter[u] += 1;
            }
            if !advanced {
                match path.pop() {
                    Some(eid) => {
                        u = self.to[eid ^ 1];
                        self.iter[u] += 1;
                    }
                    None => return 0,
                }
            }
        }
    }

    fn run(&mut self, s: usize, t: usize) -> i128 {
        if s == t {
            return 0;
        }
        let mut total: i128 = 0;
        while self.bfs(s, t) {
            self.iter = vec![0; self.n];
            loop {
                let pushed = self.augment(s, t);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
        total
    }
}

/// Decomposes a flow into source→sink paths and projects each one back to
/// the original graph through edge provenance (ε-edges vanish). Cycles in
/// the decomposition carry no s-t value and are discarded. Identical
/// projected paths are merged; the result is sorted lexicographically.
pub fn extract_paths(tg: &TransformedGraph, flow: &FlowResult) -> Vec<PathFlow> {
    let mut residual: Vec<Rational> = flow.edge_flows.clone();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); tg.node_count()];
    for (i, e) in tg.edges().iter().enumerate() {
        adj[e.from].push(i);
    }
    let mut merged: BTreeMap<Vec<EdgeId>, Rational> = BTreeMap::new();

    'outer: loop {
        // Greedy walk along positive-flow edges from the source.
        let mut walk: Vec<usize> = Vec::new();
        let mut at: Vec<usize> = vec![tg.source()];
        loop {
            let u = *at.last().expect("nonempty");
            if u == tg.sink() && !walk.is_empty() {
                let bottleneck = walk
                    .iter()
                    .map(|&i| residual[i])
                    .min()
                    .expect("nonempty walk");
                let mut projected = Vec::new();
                for &i in &walk {
                    residual[i] -= bottleneck;
                    if let Provenance::Mapped { edge, .. } = tg.edges()[i].provenance {
                        projected.push(edge);
                    }
                }
                *merged.entry(projected).or_insert_with(Rational::zero) += bottleneck;
                continue 'outer;
            }
            let next = adj[u].iter().copied().find(|&i| residual[i].is_positive());
            match next {
                Some(i) => {
                    let v = tg.edges()[i].to;
                    if let Some(pos) = at.iter().position(|&w| w == v) {
                        // Cycle: cancel its flow and restart the walk.
                        let cycle = &walk[pos..];
                        let bottleneck = cycle
                            .iter()
                            .map(|&j| residual[j])
                            .chain(std::iter::once(residual[i]))
                            .min()
                            .expect("nonempty cycle");
                        residual[i] -= bottleneck;
                        for &j in cycle {
                            residual[j] -= bottleneck;
                        }
                        continue 'outer;
                    }
                    walk.push(i);
                    at.push(v);
                }
                None => {
                    if u == tg.source() {
                        break 'outer;
                    }
                    // Conservation guarantees progress from internal nodes;
                    // reaching here means the flow was not a valid flow.
                    unreachable!("stranded flow at internal node");
                }
            }
        }
    }

    merged
        .into_iter()
        .filter(|(_, f)| f.is_positive())
        .map(|(edges, flow)| PathFlow { edges, flow })
        .collect()
}

/// Runs the whole pipeline: normalize terminals, decompose every per-symbol
/// relation, add aggregators, build and prune the product graph, run both
/// max-flows, and project the realizing paths of the upper-bound flow.
pub fn min_cut_bounds(
    g: &LabeledDigraph,
    nfa: &PolicyNfa,
    v1: &str,
    vn: &str,
    policy: &str,
) -> Result<CutReport> {
    let norm = nfa.normalize_terminals()?;
    let decs = decompose_all(&norm);
    let aug = augment_aggregators(&norm, &decs)?;
    let tg = tensor_transform(g, &aug, v1, vn)?;
    let tg = prune_unreachable(&tg);

    let upper = max_flow(&tg, Bound::Upper)?;
    let lower = max_flow(&tg, Bound::Lower)?;
    assert!(lower.value <= upper.value, "bound order violated");
    let exact = aug.all_exact();
    if exact {
        assert_eq!(lower.value, upper.value, "exact case must coincide");
    }

    let paths = extract_paths(&tg, &upper);
    let mut total = Rational::zero();
    for p in &paths {
        total += p.flow;
        let labels: Vec<&str> = p
            .edges
            .iter()
            .map(|id| g.alphabet().name(g.edge(*id).label))
            .collect();
        assert!(
            nfa.accepts(&labels),
            "projected path has a non-compliant label string {labels:?}"
        );
    }
    assert!(total <= upper.value, "path flows exceed the upper bound");

    Ok(CutReport {
        lower: lower.value,
        upper: upper.value,
        exact,
        paths,
        policy: policy.to_string(),
        source: v1.to_string(),
        sink: vn.to_string(),
        block_counts: aug.block_counts(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Alphabet;
    use crate::policy::{compile_nfa, parse_policy};

    fn unit() -> Capacity {
        Capacity::from_integer(1)
    }

    fn cap(n: i128) -> Capacity {
        Capacity::from_integer(n)
    }

    fn rat(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn vf_triangle() -> LabeledDigraph {
        let alphabet = Alphabet::new(["c2p", "p2c", "p2p"]).unwrap();
        LabeledDigraph::build(
            alphabet,
            &[
                ("A", "B", "c2p", unit()),
                ("B", "A", "p2c", unit()),
                ("B", "C", "p2c", unit()),
                ("C", "B", "c2p", unit()),
                ("A", "C", "p2p", unit()),
                ("C", "A", "p2p", unit()),
            ],
        )
        .unwrap()
    }

    fn valley_free_nfa() -> PolicyNfa {
        let alphabet = Alphabet::new(["c2p", "p2c", "p2p"]).unwrap();
        let expr = parse_policy("c2p* p2p? p2c*", &alphabet).unwrap();
        compile_nfa(&expr, &alphabet).unwrap()
    }

    fn chain_fixture() -> (LabeledDigraph, PolicyNfa) {
        let alphabet = Alphabet::new(["a"]).unwrap();
        let g = LabeledDigraph::build(
            alphabet.clone(),
            &[("v1", "v2", "a", unit()), ("v2", "v3", "a", unit())],
        )
        .unwrap();
        let nfa = PolicyNfa::from_indexed(
            alphabet,
            3,
            0,
            &[2],
            &[(0, "a", 1), (1, "a", 2)],
        )
        .unwrap();
        (g, nfa)
    }

    #[test]
    fn single_edge_unit_flow() {
        let alphabet = Alphabet::new(["a"]).unwrap();
        let g = LabeledDigraph::build(alphabet.clone(), &[("v1", "v2", "a", unit())]).unwrap();
        let nfa =
            PolicyNfa::from_indexed(alphabet, 2, 0, &[1], &[(0, "a", 1)]).unwrap();
        let report = min_cut_bounds(&g, &nfa, "v1", "v2", "a").unwrap();
        assert_eq!(report.lower, rat(1, 1));
        assert_eq!(report.upper, rat(1, 1));
        assert!(report.exact);
    }

    #[test]
    fn chain_nfa_bounds_are_half_and_one() {
        let (g, nfa) = chain_fixture();
        let report = min_cut_bounds(&g, &nfa, "v1", "v3", "aa-chain").unwrap();
        assert_eq!(report.lower, rat(1, 2));
        assert_eq!(report.upper, rat(1, 1));
        assert!(!report.exact);
        assert_eq!(report.block_counts, vec![("a".to_string(), 2)]);
        // The single realizing path projects to v1 -> v2 -> v3.
        assert_eq!(report.paths.len(), 1);
        assert_eq!(report.paths[0].edges, vec![EdgeId(0), EdgeId(1)]);
        assert_eq!(report.paths[0].flow, rat(1, 1));
    }

    #[test]
    fn vf_triangle_is_exactly_two() {
        let g = vf_triangle();
        let nfa = valley_free_nfa();
        let report = min_cut_bounds(&g, &nfa, "A", "C", "valley-free").unwrap();
        assert_eq!(report.lower, rat(2, 1));
        assert_eq!(report.upper, rat(2, 1));
        assert!(report.exact);
        let rendered: Vec<String> = report
            .paths
            .iter()
            .map(|p| report.describe_path(&g, p))
            .collect();
        assert_eq!(rendered, vec!["A -c2p-> B -p2c-> C", "A -p2p-> C"]);
    }

    #[test]
    fn disconnected_pair_is_zero() {
        let alphabet = Alphabet::new(["a"]).unwrap();
        let g = LabeledDigraph::build(
            alphabet.clone(),
            &[("v1", "v2", "a", unit()), ("x", "y", "a", unit())],
        )
        .unwrap();
        let nfa =
            PolicyNfa::from_indexed(alphabet, 2, 0, &[1], &[(0, "a", 1)]).unwrap();
        let report = min_cut_bounds(&g, &nfa, "v1", "y", "a").unwrap();
        assert_eq!(report.lower, Rational::zero());
        assert_eq!(report.upper, Rational::zero());
        assert!(report.paths.is_empty());
    }

    #[test]
    fn source_equals_sink_is_rejected() {
        let g = vf_triangle();
        let nfa = valley_free_nfa();
        assert!(matches!(
            min_cut_bounds(&g, &nfa, "A", "A", "valley-free"),
            Err(Error::SourceEqualsSink(_))
        ));
    }

    #[test]
    fn bisection_with_rational_capacities() {
        // Direct peering has capacity 3: total bisection A -> C is 3 + 1.
        let alphabet = Alphabet::new(["c2p", "p2c", "p2p"]).unwrap();
        let g = LabeledDigraph::build(
            alphabet,
            &[
                ("A", "B", "c2p", unit()),
                ("B", "A", "p2c", unit()),
                ("B", "C", "p2c", unit()),
                ("C", "B", "c2p", unit()),
                ("A", "C", "p2p", cap(3)),
                ("C", "A", "p2p", cap(3)),
            ],
        )
        .unwrap();
        let report = min_cut_bounds(&g, &valley_free_nfa(), "A", "C", "valley-free").unwrap();
        assert_eq!(report.upper, rat(4, 1));
        assert_eq!(report.lower, rat(4, 1));
    }

    #[test]
    fn scaling_capacities_scales_both_bounds() {
        let (g, nfa) = chain_fixture();
        let base = min_cut_bounds(&g, &nfa, "v1", "v3", "x").unwrap();
        let scaled_graph = g.scale_capacities(Rational::from_integer(7));
        let scaled = min_cut_bounds(&scaled_graph, &nfa, "v1", "v3", "x").unwrap();
        assert_eq!(scaled.lower, base.lower * Rational::from_integer(7));
        assert_eq!(scaled.upper, base.upper * Rational::from_integer(7));
    }

    #[test]
    fn integral_value_with_integer_capacities() {
        let g = vf_triangle().scale_capacities(Rational::from_integer(3));
        let report = min_cut_bounds(&g, &valley_free_nfa(), "A", "C", "valley-free").unwrap();
        assert!(report.upper.is_integer());
    }

    #[test]
    fn zero_flow_extracts_no_paths() {
        let alphabet = Alphabet::new(["a", "b"]).unwrap();
        let g = LabeledDigraph::build(alphabet.clone(), &[("v1", "v2", "b", unit())]).unwrap();
        let nfa =
            PolicyNfa::from_indexed(alphabet, 2, 0, &[1], &[(0, "a", 1)]).unwrap();
        let report = min_cut_bounds(&g, &nfa, "v1", "v2", "a").unwrap();
        assert_eq!(report.upper, Rational::zero());
        assert!(report.paths.is_empty());
    }

    #[test]
    fn chain_path_string_recheck() {
        let (g, nfa) = chain_fixture();
        let report = min_cut_bounds(&g, &nfa, "v1", "v3", "aa").unwrap();
        for p in &report.paths {
            let labels: Vec<&str> = p
                .edges
                .iter()
                .map(|id| g.alphabet().name(g.edge(*id).label))
                .collect();
            assert!(nfa.accepts(&labels));
        }
    }

    #[test]
    fn pruning_the_triangle_preserves_both_flows() {
        let g = vf_triangle();
        let norm = valley_free_nfa().normalize_terminals().unwrap();
        let aug = augment_aggregators(&norm, &decompose_all(&norm)).unwrap();
        let tg = tensor_transform(&g, &aug, "A", "C").unwrap();
        let pruned = prune_unreachable(&tg);
        assert!(pruned.node_count() < tg.node_count());
        for bound in [Bound::Upper, Bound::Lower] {
            assert_eq!(
                max_flow(&tg, bound).unwrap().value,
                max_flow(&pruned, bound).unwrap().value
            );
        }
    }

    #[test]
    fn max_flow_is_deterministic() {
        let g = vf_triangle();
        let nfa = valley_free_nfa();
        let a = min_cut_bounds(&g, &nfa, "A", "C", "vf").unwrap();
        let b = min_cut_bounds(&g, &nfa, "A", "C", "vf").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_source_caps_diversity_at_node_capacity() {
        // Two parallel routes s->t, but s itself only admits 1 unit.
        let alphabet = Alphabet::new(["x"]).unwrap();
        let g = LabeledDigraph::build(
            alphabet.clone(),
            &[
                ("s", "a", "x", unit()),
                ("a", "t", "x", unit()),
                ("s", "b", "x", unit()),
                ("b", "t", "x", unit()),
            ],
        )
        .unwrap();
        let expr = parse_policy("x+", &alphabet).unwrap();
        let nfa = compile_nfa(&expr, &alphabet).unwrap();
        let unsplit = min_cut_bounds(&g, &nfa, "s", "t", "x+").unwrap();
        assert_eq!(unsplit.upper, rat(2, 1));

        let mut spec = std::collections::BTreeMap::new();
        spec.insert("s".to_string(), ("x".to_string(), unit()));
        let (split, rename) = g.split_nodes(&spec).unwrap();
        let (s_in, _) = &rename["s"];
        let capped = min_cut_bounds(&split, &nfa, s_in, "t", "x+").unwrap();
        assert_eq!(capped.upper, rat(1, 1), "min(node capacity, edge cut)");
        assert!(capped.exact);
    }
}
