//! Policy-compliant path diversity and bisection bandwidth.
//!
//! Given a directed graph with labeled, capacitated edges and a routing
//! policy expressed as a regular expression over those labels, this crate
//! builds a product of the graph with the policy automaton (augmented with
//! aggregator states so the minimum cut is not inflated) and runs exact
//! max-flow over it. The result is a lower/upper bound pair on the
//! policy-compliant min-cut, a certificate that tells when the two bounds
//! provably coincide, and the realizing paths projected back onto the
//! original graph.
//!
//! Modules follow the pipeline:
//! - [`graph`]: labeled multigraphs, capacities, node splitting
//! - [`policy`]: regex parsing, ε-NFAs, composition, presets
//! - [`decompose`]: per-symbol transition analysis and biclique partitions
//! - [`transform`]: aggregator augmentation and the product graph
//! - [`flow`]: max-flow/min-cut over the product, bounds and path reports
//! - [`oracle`]: brute-force ground truth for small instances
//! - [`ingest`]: AS-relationship topologies, peering augmentation, sampling

pub mod capacity;
pub mod decompose;
pub mod error;
pub mod flow;
pub mod graph;
pub mod ingest;
pub mod oracle;
pub mod policy;
pub mod synth;
pub mod transform;

pub use capacity::{Capacity, Rational};
pub use error::{Error, Result};
pub use graph::{Alphabet, EdgeId, LabeledDigraph, Symbol};
pub use policy::{compile_nfa, parse_policy, preset, PolicyExpr, PolicyNfa};
