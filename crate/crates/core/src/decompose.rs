//! Per-symbol transition analysis: Cartesian-product tests and the
//! decomposition of a transition relation into disjoint product blocks
//! (a biclique partition of the relation seen as a bipartite graph).
//!
//! The block count `n_s` drives the gap between the lower and upper
//! min-cut bounds, so the partition is exact-minimal for relations of up
//! to [`EXACT_SEARCH_MAX_PAIRS`] pairs and greedy beyond that.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{Symbol, EPSILON_SPELLINGS};
use crate::policy::{PolicyNfa, StateId};

/// Relations at or below this many pairs get an exhaustive minimal partition.
pub const EXACT_SEARCH_MAX_PAIRS: usize = 16;

/// The projection `Δ_s` of the transition relation onto one symbol
/// (`label = None` projects the ε-transitions).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionRelation {
    pub label: Option<Symbol>,
    pub pairs: BTreeSet<(StateId, StateId)>,
}

impl TransitionRelation {
    pub fn domain(&self) -> BTreeSet<StateId> {
        self.pairs.iter().map(|(a, _)| *a).collect()
    }

    pub fn range(&self) -> BTreeSet<StateId> {
        self.pairs.iter().map(|(_, b)| *b).collect()
    }
}

/// Extracts `Δ_s = {(q1, q2) | (q1, s, q2) ∈ Δ}` for one symbol.
pub fn transitions_by_symbol(nfa: &PolicyNfa, label: Option<Symbol>) -> TransitionRelation {
    TransitionRelation {
        label,
        pairs: nfa
            .transitions()
            .iter()
            .filter(|t| t.label == label)
            .map(|t| (t.from, t.to))
            .collect(),
    }
}

/// Name-based variant; accepts the epsilon spellings for `Δ_ε`.
pub fn transitions_by_name(nfa: &PolicyNfa, name: &str) -> Result<TransitionRelation> {
    let label = if EPSILON_SPELLINGS.contains(&name) {
        None
    } else {
        Some(
            nfa.alphabet()
                .symbol(name)
                .ok_or_else(|| Error::UnknownSymbol(name.to_string()))?,
        )
    };
    Ok(transitions_by_symbol(nfa, label))
}

/// True iff the relation is exactly `domain × range` (empty counts as true).
pub fn is_cartesian(rel: &TransitionRelation) -> bool {
    rel.pairs.len() == rel.domain().len() * rel.range().len()
}

/// One product block `Q'_{s,k} × Q''_{s,k}` of a decomposition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Block {
    pub from: BTreeSet<StateId>,
    pub to: BTreeSet<StateId>,
}

impl Block {
    pub fn pairs(&self) -> BTreeSet<(StateId, StateId)> {
        self.from
            .iter()
            .flat_map(|a| self.to.iter().map(move |b| (*a, *b)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Minimality {
    /// Exhaustive search proved the block count minimal.
    Guaranteed,
    /// Greedy cover; the block count is an upper bound on the minimum.
    Heuristic,
}

/// A partition of `Δ_s` into disjoint Cartesian-product blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionDecomposition {
    pub label: Option<Symbol>,
    pub blocks: Vec<Block>,
    pub minimality: Minimality,
}

impl TransitionDecomposition {
    /// `n_s`, the number of blocks.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// The bounds coincide for this symbol: at most one block. The empty
    /// relation is vacuously exact (edges with this label are simply
    /// untraversable).
    pub fn exact(&self) -> bool {
        self.blocks.len() <= 1
    }
}

/// Decomposes a relation into disjoint product blocks. Minimal block count
/// for relations of at most [`EXACT_SEARCH_MAX_PAIRS`] pairs, greedy above.
pub fn decompose(rel: &TransitionRelation) -> TransitionDecomposition {
    let pairs: Vec<(StateId, StateId)> = rel.pairs.iter().copied().collect();
    let (mut blocks, minimality) = if pairs.len() <= EXACT_SEARCH_MAX_PAIRS {
        (minimal_partition(&pairs), Minimality::Guaranteed)
    } else {
        (greedy_partition(&pairs), Minimality::Heuristic)
    };
    blocks.sort();
    TransitionDecomposition {
        label: rel.label,
        blocks,
        minimality,
    }
}

/// The greedy partition regardless of size, exposed so the heuristic can be
/// compared against the exact search.
pub fn decompose_greedy(rel: &TransitionRelation) -> TransitionDecomposition {
    let pairs: Vec<(StateId, StateId)> = rel.pairs.iter().copied().collect();
    let mut blocks = greedy_partition(&pairs);
    blocks.sort();
    TransitionDecomposition {
        label: rel.label,
        blocks,
        minimality: Minimality::Heuristic,
    }
}

fn block_of_mask(pairs: &[(StateId, StateId)], mask: u32) -> Block {
    let mut from = BTreeSet::new();
    let mut to = BTreeSet::new();
    for (i, (a, b)) in pairs.iter().enumerate() {
        if mask >> i & 1 == 1 {
            from.insert(*a);
            to.insert(*b);
        }
    }
    Block { from, to }
}

/// Exhaustive minimum partition by dynamic programming over pair subsets:
/// a subset is usable as a block iff it is itself a full product, and
/// `f[mask]` is the least number of such blocks partitioning `mask`.
fn minimal_partition(pairs: &[(StateId, StateId)]) -> Vec<Block> {
    let m = pairs.len();
    if m == 0 {
        return Vec::new();
    }
    let full: u32 = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    let mut is_product = vec![false; (full as usize) + 1];
    for mask in 1..=full {
        let block = block_of_mask(pairs, mask);
        is_product[mask as usize] =
            mask.count_ones() as usize == block.from.len() * block.to.len();
    }
    let mut best = vec![u8::MAX; (full as usize) + 1];
    let mut choice = vec![0u32; (full as usize) + 1];
    best[0] = 0;
    for mask in 1..=full {
        let low = 1u32 << mask.trailing_zeros();
        // Enumerate submasks of `mask` that contain the lowest pair.
        let mut sub = mask;
        loop {
            if sub & low != 0 && is_product[sub as usize] {
                let rest = best[(mask ^ sub) as usize];
                if rest != u8::MAX && rest + 1 < best[mask as usize] {
                    best[mask as usize] = rest + 1;
                    choice[mask as usize] = sub;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask;
        }
    }
    let mut blocks = Vec::with_capacity(best[full as usize] as usize);
    let mut mask = full;
    while mask != 0 {
        let sub = choice[mask as usize];
        blocks.push(block_of_mask(pairs, sub));
        mask ^= sub;
    }
    blocks
}

/// Greedy partition: take the smallest unprocessed pair `(a, b)`, use `a`'s
/// full remaining out-set as the column set, widen the row set to every
/// state whose remaining out-set covers it, remove the block and repeat.
fn greedy_partition(pairs: &[(StateId, StateId)]) -> Vec<Block> {
    let mut remaining: BTreeSet<(StateId, StateId)> = pairs.iter().copied().collect();
    let mut blocks = Vec::new();
    while let Some(&(a, _)) = remaining.iter().next() {
        let to: BTreeSet<StateId> = remaining
            .iter()
            .filter(|(x, _)| *x == a)
            .map(|(_, y)| *y)
            .collect();
        let candidates: BTreeSet<StateId> = remaining.iter().map(|(x, _)| *x).collect();
        let from: BTreeSet<StateId> = candidates
            .into_iter()
            .filter(|x| to.iter().all(|y| remaining.contains(&(*x, *y))))
            .collect();
        let block = Block { from, to };
        for p in block.pairs() {
            remaining.remove(&p);
        }
        blocks.push(block);
    }
    blocks
}
