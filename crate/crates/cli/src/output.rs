//! Report shapes and formatting. JSON output is versioned and built from
//! ordered containers so identical runs are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use polycut::capacity::Rational;
use polycut::decompose::{Minimality, TransitionDecomposition};
use polycut::flow::CutReport;
use polycut::policy::PolicyNfa;
use polycut::LabeledDigraph;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

#[derive(Serialize)]
pub struct ErrorRecord {
    pub schema_version: u32,
    pub error: String,
}

#[derive(Serialize)]
pub struct PathReport {
    pub hops: Vec<String>,
    pub labels: Vec<String>,
    pub flow: String,
}

#[derive(Serialize)]
pub struct MincutReport {
    pub schema_version: u32,
    pub command: String,
    pub policy: String,
    pub source: String,
    pub sink: String,
    pub lower: String,
    pub upper: String,
    pub exact: bool,
    pub n_s: BTreeMap<String, usize>,
    pub paths: Vec<PathReport>,
}

pub fn path_report(g: &LabeledDigraph, path: &polycut::flow::PathFlow) -> PathReport {
    let mut hops = Vec::with_capacity(path.edges.len() + 1);
    let mut labels = Vec::with_capacity(path.edges.len());
    for (i, id) in path.edges.iter().enumerate() {
        let e = g.edge(*id);
        if i == 0 {
            hops.push(g.node_name(e.src as usize).to_string());
        }
        hops.push(g.node_name(e.dst as usize).to_string());
        labels.push(g.alphabet().name(e.label).to_string());
    }
    PathReport {
        hops,
        labels,
        flow: path.flow.to_string(),
    }
}

pub fn mincut_report(command: &str, g: &LabeledDigraph, report: &CutReport) -> MincutReport {
    MincutReport {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        policy: report.policy.clone(),
        source: report.source.clone(),
        sink: report.sink.clone(),
        lower: report.lower.to_string(),
        upper: report.upper.to_string(),
        exact: report.exact,
        n_s: report.block_counts.iter().cloned().collect(),
        paths: report.paths.iter().map(|p| path_report(g, p)).collect(),
    }
}

pub fn render_mincut_text(g: &LabeledDigraph, report: &CutReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "policy: {}", report.policy);
    let _ = writeln!(out, "source: {}  sink: {}", report.source, report.sink);
    let _ = writeln!(
        out,
        "n_s: {}",
        report
            .block_counts
            .iter()
            .map(|(s, n)| format!("{s}={n}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    if report.exact {
        let _ = writeln!(out, "exact: yes");
        let _ = writeln!(out, "min-cut: {}", report.upper);
    } else {
        let _ = writeln!(out, "exact: no");
        let _ = writeln!(out, "bounds: [{}, {}]", report.lower, report.upper);
    }
    let _ = writeln!(out, "paths:");
    for p in &report.paths {
        let _ = writeln!(out, "  {}  [flow {}]", report.describe_path(g, p), p.flow);
    }
    out
}

pub fn render_mincut_csv(report: &CutReport) -> String {
    let mut out = String::from("source,sink,lower,upper,exact\n");
    let _ = writeln!(
        out,
        "{},{},{},{},{}",
        report.source, report.sink, report.lower, report.upper, report.exact
    );
    out
}

#[derive(Serialize)]
pub struct BlockReport {
    pub from: Vec<String>,
    pub to: Vec<String>,
}

#[derive(Serialize)]
pub struct SymbolReport {
    pub symbol: String,
    pub n_s: usize,
    pub cartesian: bool,
    pub minimality: String,
    pub blocks: Vec<BlockReport>,
}

#[derive(Serialize)]
pub struct CheckExactReport {
    pub schema_version: u32,
    pub command: String,
    pub policy: String,
    pub exact: bool,
    pub symbols: Vec<SymbolReport>,
}

pub fn check_exact_report(
    policy: &str,
    nfa: &PolicyNfa,
    decs: &[TransitionDecomposition],
) -> CheckExactReport {
    let symbols: Vec<SymbolReport> = nfa
        .alphabet()
        .iter()
        .map(|(sym, name)| {
            let dec = &decs[sym.0 as usize];
            SymbolReport {
                symbol: name.to_string(),
                n_s: dec.block_count(),
                cartesian: dec.exact(),
                minimality: match dec.minimality {
                    Minimality::Guaranteed => "guaranteed".to_string(),
                    Minimality::Heuristic => "heuristic".to_string(),
                },
                blocks: dec
                    .blocks
                    .iter()
                    .map(|b| BlockReport {
                        from: b.from.iter().map(|q| nfa.state_name(*q).to_string()).collect(),
                        to: b.to.iter().map(|q| nfa.state_name(*q).to_string()).collect(),
                    })
                    .collect(),
            }
        })
        .collect();
    CheckExactReport {
        schema_version: SCHEMA_VERSION,
        command: "check-exact".to_string(),
        policy: policy.to_string(),
        exact: symbols.iter().all(|s| s.n_s <= 1),
        symbols,
    }
}

pub fn render_check_exact_text(report: &CheckExactReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "policy: {}", report.policy);
    for s in &report.symbols {
        let _ = writeln!(
            out,
            "symbol {}: n_s={} cartesian={} minimality={}",
            s.symbol, s.n_s, s.cartesian, s.minimality
        );
        for b in &s.blocks {
            let _ = writeln!(
                out,
                "  block: {{{}}} x {{{}}}",
                b.from.join(","),
                b.to.join(",")
            );
        }
    }
    let _ = writeln!(
        out,
        "verdict: {}",
        if report.exact {
            "exact (lower and upper bounds coincide)"
        } else {
            "bounds only (some relation needs more than one block)"
        }
    );
    out
}

#[derive(Serialize)]
pub struct OraclePathReport {
    pub hops: Vec<String>,
    pub labels: Vec<String>,
}

#[derive(Serialize)]
pub struct OracleReport {
    pub schema_version: u32,
    pub command: String,
    pub policy: String,
    pub source: String,
    pub sink: String,
    pub max_len: usize,
    pub compliant_paths: Vec<OraclePathReport>,
    pub diversity: usize,
    pub bisection: String,
}

pub fn render_oracle_text(report: &OracleReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "policy: {}", report.policy);
    let _ = writeln!(out, "source: {}  sink: {}", report.source, report.sink);
    let _ = writeln!(
        out,
        "compliant paths (max {} edges): {}",
        report.max_len,
        report.compliant_paths.len()
    );
    for p in &report.compliant_paths {
        let _ = writeln!(out, "  {}  via [{}]", p.hops.join(" -> "), p.labels.join(" "));
    }
    let _ = writeln!(out, "diversity (edge-disjoint packing): {}", report.diversity);
    let _ = writeln!(out, "bisection (fractional packing): {}", report.bisection);
    out
}

/// Population mean and standard deviation.
pub fn mean_stddev(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Serialize)]
pub struct PairResult {
    pub source: String,
    pub sink: String,
    pub lower: String,
    pub upper: String,
    pub exact: bool,
}

#[derive(Serialize)]
pub struct ExperimentSummary {
    pub pairs: usize,
    pub mu_lower: f64,
    pub sigma_lower: f64,
    pub mu_upper: f64,
    pub sigma_upper: f64,
}

#[derive(Serialize)]
pub struct DiversityExperimentReport {
    pub schema_version: u32,
    pub command: String,
    pub policy: String,
    pub seed: u64,
    pub exact: bool,
    pub n_s: BTreeMap<String, usize>,
    pub rows: Vec<PairResult>,
    pub summary: ExperimentSummary,
}

pub fn render_diversity_experiment_csv(report: &DiversityExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pair,source,sink,lower,upper,exact");
    for (i, row) in report.rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            i, row.source, row.sink, row.lower, row.upper, row.exact
        );
    }
    let _ = writeln!(out, "# policy: {}", report.policy);
    let _ = writeln!(out, "# seed: {}", report.seed);
    let _ = writeln!(
        out,
        "# n_s: {}",
        report
            .n_s
            .iter()
            .map(|(s, n)| format!("{s}={n}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    let _ = writeln!(out, "# exact: {}", report.exact);
    let _ = writeln!(out, "# pairs: {}", report.summary.pairs);
    let _ = writeln!(
        out,
        "# mu_lower: {:.6}\n# sigma_lower: {:.6}\n# mu_upper: {:.6}\n# sigma_upper: {:.6}",
        report.summary.mu_lower,
        report.summary.sigma_lower,
        report.summary.mu_upper,
        report.summary.sigma_upper
    );
    out
}

#[derive(Serialize)]
pub struct DepeeringPairResult {
    pub source: String,
    pub sink: String,
    pub lower_before: String,
    pub upper_before: String,
    pub lower_after: String,
    pub upper_after: String,
}

#[derive(Serialize)]
pub struct DepeeringExperimentReport {
    pub schema_version: u32,
    pub command: String,
    pub policy: String,
    pub seed: u64,
    pub exact: bool,
    pub n_s: BTreeMap<String, usize>,
    pub depeered: Vec<String>,
    pub rows: Vec<DepeeringPairResult>,
    pub pairs: usize,
    pub mu_upper_before: f64,
    pub mu_upper_after: f64,
    /// Relative drop in the mean upper bound, in percent.
    pub difference_pct: f64,
}

pub fn render_depeering_experiment_csv(report: &DepeeringExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "pair,source,sink,lower_before,upper_before,lower_after,upper_after"
    );
    for (i, row) in report.rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            i,
            row.source,
            row.sink,
            row.lower_before,
            row.upper_before,
            row.lower_after,
            row.upper_after
        );
    }
    let _ = writeln!(out, "# policy: {}", report.policy);
    let _ = writeln!(out, "# seed: {}", report.seed);
    let _ = writeln!(out, "# depeered: {}", report.depeered.join(" "));
    let _ = writeln!(out, "# exact: {}", report.exact);
    let _ = writeln!(out, "# pairs: {}", report.pairs);
    let _ = writeln!(out, "# mu_before: {:.6}", report.mu_upper_before);
    let _ = writeln!(out, "# mu_after: {:.6}", report.mu_upper_after);
    let _ = writeln!(out, "# difference_pct: {:.2}", report.difference_pct);
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization");
    s.push('\n');
    s
}
