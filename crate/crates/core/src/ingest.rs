//! Real-world inter-domain topologies: AS-relationship files, peering
//! augmentation from IXP membership lists, prefix-weighted pair sampling,
//! and customer-cone extraction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::capacity::Capacity;
use crate::error::{Error, Result};
use crate::graph::{Alphabet, LabeledDigraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relationship {
    /// First AS is a provider of the second.
    P2c,
    /// The ASes peer.
    P2p,
}

/// Parsed AS-relationship data: `(a, b, P2c)` means `a` is a provider of `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsRelationshipSet {
    pub records: Vec<(u32, u32, Relationship)>,
}

/// Parses the `<as_a>|<as_b>|<rel>` relationship format: rel `-1` means
/// a-is-provider-of-b, `0` means peers. `#` starts a comment; a fourth
/// field (dataset provenance) is tolerated and ignored. Restating the same
/// relationship is fine; contradicting an earlier one is an error.
pub fn parse_as_rel(text: &str) -> Result<AsRelationshipSet> {
    let mut records = Vec::new();
    // Unordered pair -> (relationship, provider if P2c).
    let mut seen: BTreeMap<(u32, u32), (Relationship, u32)> = BTreeMap::new();
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
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::ParseError {
                line: lineno + 1,
                reason: format!("expected `as_a|as_b|rel`, got {} field(s)", fields.len()),
            });
        }
        let asn = |s: &str| -> Result<u32> {
            let v: u32 = s.parse().map_err(|_| Error::ParseError {
                line: lineno + 1,
                reason: format!("bad AS number `{s}`"),
            })?;
            if v == 0 {
                return Err(Error::ParseError {
                    line: lineno + 1,
                    reason: "AS number must be positive".to_string(),
                });
            }
            Ok(v)
        };
        let a = asn(fields[0])?;
        let b = asn(fields[1])?;
        if a == b {
            return Err(Error::ParseError {
                line: lineno + 1,
                reason: format!("self relationship for AS {a}"),
            });
        }
        let rel = match fields[2] {
            "-1" => Relationship::P2c,
            "0" => Relationship::P2p,
            other => {
                return Err(Error::ParseError {
                    line: lineno + 1,
                    reason: format!("unknown relationship `{other}` (expected -1 or 0)"),
                })
            }
        };
        let key = (a.min(b), a.max(b));
        let entry = (rel, if rel == Relationship::P2c { a } else { 0 });
        match seen.get(&key) {
            None => {
                seen.insert(key, entry);
                records.push((a, b, rel));
            }
            Some(prev) if *prev == entry => {} // restated, keep the first
            Some(_) => {
                return Err(Error::ConflictingRelationship { a, b });
            }
        }
    }
    Ok(AsRelationshipSet { records })
}

/// The `{c2p, p2p, p2c}` alphabet used by AS-level graphs and presets.
pub fn as_alphabet() -> Alphabet {
    Alphabet::new(["c2p", "p2p", "p2c"]).expect("static alphabet")
}

/// Expands relationship records into the directed labeled graph: each p2c
/// record yields a `p2c` edge provider→customer and a `c2p` edge back; each
/// p2p record yields `p2p` edges both ways. All capacities are 1; AS
/// numbers become their decimal node names.
pub fn to_labeled_graph(rels: &AsRelationshipSet) -> LabeledDigraph {
    let unit = Capacity::from_integer(1);
    let mut rows: Vec<(String, String, String, Capacity)> =
        Vec::with_capacity(rels.records.len() * 2);
    for (a, b, rel) in &rels.records {
        let (a, b) = (a.to_string(), b.to_string());
        match rel {
            Relationship::P2c => {
                rows.push((a.clone(), b.clone(), "p2c".to_string(), unit));
                rows.push((b, a, "c2p".to_string(), unit));
            }
            Relationship::P2p => {
                rows.push((a.clone(), b.clone(), "p2p".to_string(), unit));
                rows.push((b, a, "p2p".to_string(), unit));
            }
        }
    }
    LabeledDigraph::build(as_alphabet(), &rows).expect("fixed alphabet and unit capacities")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeeringPolicy {
    Open,
    Selective,
    Restrictive,
}

impl std::str::FromStr for PeeringPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "open" => Ok(PeeringPolicy::Open),
            "selective" => Ok(PeeringPolicy::Selective),
            "restrictive" => Ok(PeeringPolicy::Restrictive),
            other => Err(Error::InvalidInput(format!(
                "unknown peering policy `{other}`"
            ))),
        }
    }
}

/// Parses the IXP membership CSV `asn,policy` (policy one of open,
/// selective, restrictive; case-insensitive; optional header line).
pub fn parse_peering_members(text: &str) -> Result<Vec<(u32, PeeringPolicy)>> {
    let mut members = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::ParseError {
                line: lineno + 1,
                reason: format!("expected `asn,policy`, got {} field(s)", fields.len()),
            });
        }
        let asn: u32 = match fields[0].parse() {
            Ok(v) => v,
            Err(_) if lineno == 0 => continue, // header line
            Err(_) => {
                return Err(Error::ParseError {
                    line: lineno + 1,
                    reason: format!("bad AS number `{}`", fields[0]),
                })
            }
        };
        let policy: PeeringPolicy = fields[1].parse().map_err(|_| Error::ParseError {
            line: lineno + 1,
            reason: format!("unknown peering policy `{}`", fields[1]),
        })?;
        members.push((asn, policy));
    }
    Ok(members)
}

/// Adds `p2p` edges (both directions, capacity 1) between every unordered
/// pair of members of the selected policy class that has no existing
/// relationship in the graph. Existing relationships always win; the
/// operation is idempotent.
pub fn augment_peering(
    g: &LabeledDigraph,
    members: &[(u32, PeeringPolicy)],
    class: PeeringPolicy,
) -> LabeledDigraph {
    let mut connected: BTreeSet<(String, String)> = BTreeSet::new();
    for (_, e) in g.edges() {
        let a = g.node_name(e.src as usize).to_string();
        let b = g.node_name(e.dst as usize).to_string();
        let key = if a <= b { (a, b) } else { (b, a) };
        connected.insert(key);
    }
    let selected: Vec<u32> = {
        let mut set = BTreeSet::new();
        members
            .iter()
            .filter(|(_, p)| *p == class)
            .filter(|(asn, _)| set.insert(*asn))
            .map(|(asn, _)| *asn)
            .collect()
    };

    let unit = Capacity::from_integer(1);
    let mut rows: Vec<(String, String, String, Capacity)> = g
        .edges()
        .map(|(_, e)| {
            (
                g.node_name(e.src as usize).to_string(),
                g.node_name(e.dst as usize).to_string(),
                g.alphabet().name(e.label).to_string(),
                e.capacity,
            )
        })
        .collect();
    for i in 0..selected.len() {
        for j in (i + 1)..selected.len() {
            let (a, b) = (selected[i].to_string(), selected[j].to_string());
            let key = if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            };
            if connected.contains(&key) {
                continue;
            }
            rows.push((a.clone(), b.clone(), "p2p".to_string(), unit));
            rows.push((b, a, "p2p".to_string(), unit));
        }
    }
    LabeledDigraph::build(g.alphabet().clone(), &rows).expect("rows from a valid graph")
}

/// Announced-address weights for AS sampling (insertion order preserved,
/// which fixes the sampling order for a given seed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightTable {
    entries: Vec<(u32, u64)>,
}

impl WeightTable {
    pub fn new(entries: Vec<(u32, u64)>) -> Self {
        WeightTable { entries }
    }

    /// Uniform weights over the given ASes.
    pub fn uniform<I: IntoIterator<Item = u32>>(asns: I) -> Self {
        WeightTable {
            entries: asns.into_iter().map(|a| (a, 1)).collect(),
        }
    }

    /// Parses the CSV `asn,address_count` (optional header line).
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::ParseError {
                    line: lineno + 1,
                    reason: format!("expected `asn,address_count`, got {} field(s)", fields.len()),
                });
            }
            let asn: u32 = match fields[0].parse() {
                Ok(v) => v,
                Err(_) if lineno == 0 => continue, // header line
                Err(_) => {
                    return Err(Error::ParseError {
                        line: lineno + 1,
                        reason: format!("bad AS number `{}`", fields[0]),
                    })
                }
            };
            let weight: u64 = fields[1].parse().map_err(|_| Error::ParseError {
                line: lineno + 1,
                reason: format!("bad weight `{}`", fields[1]),
            })?;
            entries.push((asn, weight));
        }
        Ok(WeightTable { entries })
    }

    pub fn positive_support(&self) -> usize {
        self.entries.iter().filter(|(_, w)| *w > 0).count()
    }

    pub fn entries(&self) -> &[(u32, u64)] {
        &self.entries
    }

    /// Keeps only the listed ASes.
    pub fn restricted_to(&self, keep: &BTreeSet<u32>) -> WeightTable {
        WeightTable {
            entries: self
                .entries
                .iter()
                .filter(|(a, _)| keep.contains(a))
                .copied()
                .collect(),
        }
    }

    /// One weight-proportional draw.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let total: u64 = self.entries.iter().map(|(_, w)| w).sum();
        debug_assert!(total > 0);
        let mut x = rng.gen_range(0..total);
        for (asn, w) in &self.entries {
            if x < *w {
                return *asn;
            }
            x -= w;
        }
        unreachable!("draw below total weight")
    }
}

/// Samples `n` AS pairs, both endpoints weight-proportional and independent,
/// redrawing whenever the two endpoints coincide. Bit-stable for a fixed
/// seed.
pub fn weighted_sample_pairs(
    weights: &WeightTable,
    n: usize,
    seed: u64,
) -> Result<Vec<(u32, u32)>> {
    if weights.positive_support() < 2 {
        return Err(Error::InsufficientSupport);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n);
    while pairs.len() < n {
        let a = weights.sample(&mut rng);
        let b = weights.sample(&mut rng);
        if a != b {
            pairs.push((a, b));
        }
    }
    Ok(pairs)
}

/// Samples `n` pairs with the two endpoints drawn from two separate weight
/// tables (e.g. two exclusive customer cones), redrawing on coincidence.
pub fn weighted_sample_pairs_between(
    first: &WeightTable,
    second: &WeightTable,
    n: usize,
    seed: u64,
) -> Result<Vec<(u32, u32)>> {
    if first.positive_support() == 0 || second.positive_support() == 0 {
        return Err(Error::InsufficientSupport);
    }
    // Coincident draws are only redrawable when some distinct pair exists.
    let first_support: BTreeSet<u32> = first
        .entries()
        .iter()
        .filter(|(_, w)| *w > 0)
        .map(|(a, _)| *a)
        .collect();
    let second_support: BTreeSet<u32> = second
        .entries()
        .iter()
        .filter(|(_, w)| *w > 0)
        .map(|(a, _)| *a)
        .collect();
    let only_choice = first_support.len() == 1
        && second_support.len() == 1
        && first_support == second_support;
    if only_choice {
        return Err(Error::InsufficientSupport);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n);
    while pairs.len() < n {
        let a = first.sample(&mut rng);
        let b = second.sample(&mut rng);
        if a != b {
            pairs.push((a, b));
        }
    }
    Ok(pairs)
}

fn cone(g: &LabeledDigraph, root: &str, depth: usize) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    let Some(root_idx) = g.node_index(root) else {
        return out;
    };
    let p2c = match g.alphabet().symbol("p2c") {
        Some(s) => s,
        None => return out,
    };
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); g.node_count()];
    for (_, e) in g.edges() {
        if e.label == p2c {
            adj[e.src as usize].push(e.dst as usize);
        }
    }
    let mut dist: BTreeMap<usize, usize> = BTreeMap::from([(root_idx, 0)]);
    let mut queue = VecDeque::from([root_idx]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        if d == depth {
            continue;
        }
        for &w in &adj[u] {
            if let std::collections::btree_map::Entry::Vacant(slot) = dist.entry(w) {
                slot.insert(d + 1);
                queue.push_back(w);
                if let Ok(asn) = g.node_name(w).parse::<u32>() {
                    out.insert(asn);
                }
            }
        }
    }
    out
}

/// ASes reachable from `asn` through at most `depth` consecutive `p2c`
/// edges (the root excluded), minus everything similarly reachable from any
/// AS in `others`.
pub fn exclusive_customer_cone(
    g: &LabeledDigraph,
    asn: u32,
    others: &BTreeSet<u32>,
    depth: usize,
) -> Result<BTreeSet<u32>> {
    let root = asn.to_string();
    g.require_node(&root)?;
    let mut result = cone(g, &root, depth);
    for other in others {
        for excluded in cone(g, &other.to_string(), depth) {
            result.remove(&excluded);
        }
    }
    result.remove(&asn);
    Ok(result)
}

/// Removes the peering between two ASes: every `p2p` edge between them, in
/// both directions. The node set is preserved.
pub fn depeer(g: &LabeledDigraph, a: u32, b: u32) -> LabeledDigraph {
    let (a, b) = (a.to_string(), b.to_string());
    let p2p = g.alphabet().symbol("p2p");
    let names: Vec<&str> = g.node_names().collect();
    g.filter_edges(&names, |_, e| {
        let src = g.node_name(e.src as usize);
        let dst = g.node_name(e.dst as usize);
        !(Some(e.label) == p2p
            && ((src == a && dst == b) || (src == b && dst == a)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basic_records() {
        let set = parse_as_rel("# header\n1|2|-1\n3|4|0\n").unwrap();
        assert_eq!(
            set.records,
            vec![(1, 2, Relationship::P2c), (3, 4, Relationship::P2p)]
        );
    }

    #[test]
    fn parse_tolerates_restatement_and_fourth_field() {
        let set = parse_as_rel("1|2|-1|bgp\n1|2|-1\n2|1|0_ignored").err();
        assert!(set.is_some()); // bad rel field on line 3
        let set = parse_as_rel("1|2|-1|bgp\n1|2|-1\n").unwrap();
        assert_eq!(set.records.len(), 1);
    }

    #[test]
    fn conflicting_relationship_rejected() {
        assert!(matches!(
            parse_as_rel("1|2|-1\n2|1|-1\n"),
            Err(Error::ConflictingRelationship { .. })
        ));
        assert!(matches!(
            parse_as_rel("1|2|-1\n1|2|0\n"),
            Err(Error::ConflictingRelationship { .. })
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_as_rel("1|2|-1\nx|2|0\n") {
            Err(Error::ParseError { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn graph_expansion_doubles_records() {
        let set = parse_as_rel("1|2|-1\n3|4|0\n").unwrap();
        let g = to_labeled_graph(&set);
        assert_eq!(g.edge_count(), 2 * set.records.len());
        assert_eq!(
            g.to_text(),
            "1|2|p2c|1\n2|1|c2p|1\n3|4|p2p|1\n4|3|p2p|1\n"
        );
    }

    #[test]
    fn every_c2p_has_reverse_p2c() {
        let set = parse_as_rel("10|20|-1\n20|30|-1\n10|30|0\n").unwrap();
        let g = to_labeled_graph(&set);
        let c2p = g.subgraph_by_label("c2p").unwrap();
        for id in c2p {
            let e = g.edge(id);
            let reverse_exists = g.edges().any(|(_, r)| {
                r.src == e.dst
                    && r.dst == e.src
                    && g.alphabet().name(r.label) == "p2c"
            });
            assert!(reverse_exists);
        }
    }

    #[test]
    fn vf_triangle_from_relationships() {
        // B (2) provider of A (1) and C (3); A and C peer.
        let set = parse_as_rel("2|1|-1\n2|3|-1\n1|3|0\n").unwrap();
        let g = to_labeled_graph(&set);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn augment_open_members_completes_the_clique() {
        let g = to_labeled_graph(&parse_as_rel("1|2|-1\n").unwrap());
        let members = vec![
            (10, PeeringPolicy::Open),
            (11, PeeringPolicy::Open),
            (12, PeeringPolicy::Open),
        ];
        let augmented = augment_peering(&g, &members, PeeringPolicy::Open);
        assert_eq!(augmented.edge_count(), g.edge_count() + 6);
    }

    #[test]
    fn augment_never_overrides_existing_relationships() {
        let g = to_labeled_graph(&parse_as_rel("1|2|-1\n").unwrap());
        let members = vec![(1, PeeringPolicy::Open), (2, PeeringPolicy::Open)];
        let augmented = augment_peering(&g, &members, PeeringPolicy::Open);
        assert_eq!(augmented, g, "p2c pair must not gain a p2p link");
    }

    #[test]
    fn augment_is_idempotent_and_classes_are_separate() {
        let g = to_labeled_graph(&parse_as_rel("1|2|-1\n").unwrap());
        let members = vec![
            (5, PeeringPolicy::Open),
            (6, PeeringPolicy::Open),
            (7, PeeringPolicy::Restrictive),
        ];
        let once = augment_peering(&g, &members, PeeringPolicy::Open);
        let twice = augment_peering(&once, &members, PeeringPolicy::Open);
        assert_eq!(once, twice);
        let restrictive = augment_peering(&g, &members, PeeringPolicy::Restrictive);
        assert_eq!(restrictive, g, "a single restrictive member adds nothing");
        let no_members = augment_peering(&g, &[], PeeringPolicy::Restrictive);
        assert_eq!(no_members, g, "empty class leaves the graph unchanged");
    }

    #[test]
    fn member_csv_parsing() {
        let members =
            parse_peering_members("asn,policy\n10,Open\n11,selective\n12,RESTRICTIVE\n").unwrap();
        assert_eq!(
            members,
            vec![
                (10, PeeringPolicy::Open),
                (11, PeeringPolicy::Selective),
                (12, PeeringPolicy::Restrictive),
            ]
        );
        assert!(parse_peering_members("10,sometimes\n").is_err());
    }

    #[test]
    fn sampling_needs_support() {
        let w = WeightTable::new(vec![(1, 1), (2, 0)]);
        assert!(matches!(
            weighted_sample_pairs(&w, 1, 7),
            Err(Error::InsufficientSupport)
        ));
    }

    #[test]
    fn two_supported_ases_always_pair_up() {
        let w = WeightTable::new(vec![(1, 1), (2, 1)]);
        let pairs = weighted_sample_pairs(&w, 1000, 99).unwrap();
        assert!(pairs
            .iter()
            .all(|&(a, b)| (a == 1 && b == 2) || (a == 2 && b == 1)));
    }

    #[test]
    fn sampling_is_seed_stable() {
        let w = WeightTable::new(vec![(1, 3), (2, 1), (3, 1)]);
        assert_eq!(
            weighted_sample_pairs(&w, 50, 123).unwrap(),
            weighted_sample_pairs(&w, 50, 123).unwrap()
        );
        assert_ne!(
            weighted_sample_pairs(&w, 50, 123).unwrap(),
            weighted_sample_pairs(&w, 50, 124).unwrap()
        );
    }

    #[test]
    fn weighted_marginal_matches_closed_form() {
        // Weights 3:1:1 put AS 1 at 0.6 of single draws.
        let w = WeightTable::new(vec![(1, 3), (2, 1), (3, 1)]);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 100_000;
        let hits = (0..draws).filter(|_| w.sample(&mut rng) == 1).count();
        let freq = hits as f64 / draws as f64;
        assert!(
            (freq - 0.6).abs() < 0.012,
            "marginal {freq} deviates from 0.6 by more than 2%"
        );
    }

    #[test]
    fn cone_of_a_chain() {
        // T1 (1) -> X (2) -> Y (3) -> Z (4), all p2c.
        let g = to_labeled_graph(&parse_as_rel("1|2|-1\n2|3|-1\n3|4|-1\n").unwrap());
        let cone3 = exclusive_customer_cone(&g, 1, &BTreeSet::new(), 3).unwrap();
        assert_eq!(cone3, BTreeSet::from([2, 3, 4]));
        let cone0 = exclusive_customer_cone(&g, 1, &BTreeSet::new(), 0).unwrap();
        assert!(cone0.is_empty());
    }

    #[test]
    fn exclusive_cone_subtracts_the_rival() {
        // 1 -> 2 -> 3 -> 4 and rival 9 -> 3: everything below 3 is shared.
        let g = to_labeled_graph(&parse_as_rel("1|2|-1\n2|3|-1\n3|4|-1\n9|3|-1\n").unwrap());
        let exclusive = exclusive_customer_cone(&g, 1, &BTreeSet::from([9]), 3).unwrap();
        assert_eq!(exclusive, BTreeSet::from([2]));
    }

    #[test]
    fn exclusive_cone_unknown_root() {
        let g = to_labeled_graph(&parse_as_rel("1|2|-1\n").unwrap());
        assert!(matches!(
            exclusive_customer_cone(&g, 42, &BTreeSet::new(), 3),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn depeering_removes_only_that_link() {
        let g = to_labeled_graph(&parse_as_rel("1|2|0\n1|3|-1\n2|3|0\n").unwrap());
        let after = depeer(&g, 1, 2);
        assert_eq!(after.edge_count(), g.edge_count() - 2);
        assert_eq!(after.node_count(), g.node_count());
        // The 2-3 peering survives.
        assert_eq!(after.subgraph_by_label("p2p").unwrap().len(), 2);
    }
}
