//! Command-line front end: transform, mincut/diversity, check-exact,
//! oracle, and batch experiments over AS-level topologies.

mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use output::OutputFormat;

use polycut::flow::min_cut_bounds;
use polycut::graph::Alphabet;
use polycut::ingest::{
    augment_peering, depeer, exclusive_customer_cone, parse_as_rel, parse_peering_members,
    to_labeled_graph, weighted_sample_pairs, weighted_sample_pairs_between, PeeringPolicy,
    WeightTable,
};
use polycut::oracle::{
    bisection_over_paths, enumerate_compliant_paths, max_disjoint_packing, OracleLimits,
};
use polycut::policy::{compile_nfa, parse_policy, preset, PolicyNfa};
use polycut::transform::{
    augment_aggregators, decompose_all, prune_unreachable, tensor_transform, Bound,
};
use polycut::{Error, LabeledDigraph};

#[derive(Parser)]
#[command(
    name = "polycut",
    version,
    about = "Policy-compliant path diversity and bisection bandwidth on labeled graphs"
)]
struct RunConfig {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the product graph for a policy and write it out
    Transform(TransformArgs),
    /// Lower/upper bounds on the policy-compliant min-cut between two nodes
    Mincut(MincutArgs),
    /// Path diversity: mincut over unit capacities
    Diversity(MincutArgs),
    /// Per-symbol decomposition report and the exactness verdict
    CheckExact(CheckExactArgs),
    /// Brute-force enumeration oracle for small instances
    Oracle(OracleArgs),
    /// Batch experiments over AS-relationship topologies
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

/// Exactly one source of the policy automaton.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct PolicyArgs {
    /// Policy regular expression over edge labels
    #[arg(long, value_name = "REGEX")]
    policy_regex: Option<String>,
    /// NFA file in the text format (start:/accept:/transition lines)
    #[arg(long, value_name = "FILE")]
    policy_nfa: Option<PathBuf>,
    /// Policy preset: valley-free, multiple-peering-links, any
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Args)]
struct TransformArgs {
    /// Graph file, one `src|dst|label|capacity` per line
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    source: String,
    #[arg(long)]
    sink: String,
    /// Output file for the product graph (provenance sidecar: <out>.prov)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Which capacity function to emit
    #[arg(long, value_enum, default_value = "upper")]
    bound: BoundArg,
    /// Drop nodes that cannot lie on any source→sink path
    #[arg(long)]
    prune: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum BoundArg {
    Upper,
    Lower,
}

impl From<BoundArg> for Bound {
    fn from(b: BoundArg) -> Bound {
        match b {
            BoundArg::Upper => Bound::Upper,
            BoundArg::Lower => Bound::Lower,
        }
    }
}

#[derive(Args)]
struct MincutArgs {
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    source: String,
    #[arg(long)]
    sink: String,
    /// Ignore file capacities and use 1 everywhere
    #[arg(long)]
    unit_capacities: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
}

#[derive(Args)]
struct CheckExactArgs {
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    source: String,
    #[arg(long)]
    sink: String,
    /// Maximum path length in edges (default: the graph's edge count)
    #[arg(long)]
    max_len: Option<usize>,
    /// Abort enumeration beyond this many search states
    #[arg(long, default_value_t = 1_000_000)]
    max_search_states: usize,
    /// Abort packing beyond this many compliant paths
    #[arg(long, default_value_t = 24)]
    max_paths: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Sample AS pairs and report per-pair bounds plus mean/stddev
    Diversity(ExperimentDiversityArgs),
    /// Compare diversity between exclusive customer cones before and after
    /// removing the peering between two tier-one sides
    Depeering(ExperimentDepeeringArgs),
}

#[derive(Args)]
struct ExperimentDiversityArgs {
    /// AS relationship file (`as_a|as_b|-1` provider, `|0` peer)
    #[arg(long, value_name = "FILE")]
    as_rel: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Number of sampled pairs
    #[arg(long)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Announced-address weights CSV `asn,address_count` (default: uniform)
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    /// IXP membership CSV `asn,policy` used to add peering links
    #[arg(long, value_name = "FILE", requires = "class")]
    augment: Option<PathBuf>,
    /// Peering policy class to augment with
    #[arg(long, value_name = "CLASS", requires = "augment")]
    class: Option<String>,
    /// Remove a peering `ASN1:ASN2` before evaluating (repeatable)
    #[arg(long, value_name = "ASN1:ASN2")]
    depeer: Vec<String>,
    /// Worker threads for pair evaluation
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Args)]
struct ExperimentDepeeringArgs {
    #[arg(long, value_name = "FILE")]
    as_rel: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Comma-separated ASNs of the first side
    #[arg(long, value_name = "ASNS")]
    tier1_a: String,
    /// Comma-separated ASNs of the second side
    #[arg(long, value_name = "ASNS")]
    tier1_b: String,
    /// Customer-cone depth in p2c hops
    #[arg(long, default_value_t = 3)]
    cone_depth: usize,
    #[arg(long)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires = "class")]
    augment: Option<PathBuf>,
    #[arg(long, value_name = "CLASS", requires = "augment")]
    class: Option<String>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

fn main() -> ExitCode {
    let config = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let format = config.format();
    match run(config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            emit_error(format, &err);
            ExitCode::from(2)
        }
    }
}

impl RunConfig {
    fn format(&self) -> OutputFormat {
        match &self.command {
            Command::Transform(_) => OutputFormat::Text,
            Command::Mincut(a) | Command::Diversity(a) => a.format,
            Command::CheckExact(a) => a.format,
            Command::Oracle(a) => a.format,
            Command::Experiment(ExperimentCommand::Diversity(a)) => a.format,
            Command::Experiment(ExperimentCommand::Depeering(a)) => a.format,
        }
    }
}

fn emit_error(format: OutputFormat, err: &Error) {
    if format == OutputFormat::Json {
        let record = output::ErrorRecord {
            schema_version: output::SCHEMA_VERSION,
            error: err.to_string(),
        };
        eprintln!("{}", serde_json::to_string(&record).expect("error record"));
    } else {
        eprintln!("error: {err}");
    }
}

fn run(config: RunConfig) -> Result<(), Error> {
    match config.command {
        Command::Transform(args) => cmd_transform(args),
        Command::Mincut(args) => cmd_mincut("mincut", args, false),
        Command::Diversity(args) => cmd_mincut("diversity", args, true),
        Command::CheckExact(args) => cmd_check_exact(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Experiment(ExperimentCommand::Diversity(args)) => cmd_experiment_diversity(args),
        Command::Experiment(ExperimentCommand::Depeering(args)) => cmd_experiment_depeering(args),
    }
}

fn read_file(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<LabeledDigraph, Error> {
    LabeledDigraph::from_text(&read_file(path)?, None)
}

/// Identifier runs of the policy grammar, used to widen the alphabet before
/// parsing so regex tokens and graph labels share one symbol table.
fn scan_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | ':' | '-') {
            current.push(c);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Resolves the policy arguments to a compiled NFA over an alphabet that
/// covers both the graph's labels and the policy's own symbols.
fn resolve_policy(
    args: &PolicyArgs,
    graph_alphabet: Option<&Alphabet>,
) -> Result<(PolicyNfa, String), Error> {
    let base = graph_alphabet.cloned().unwrap_or(Alphabet::new::<_, String>([])?);
    if let Some(name) = &args.preset {
        let (preset_alphabet, _) = preset(name)?;
        let alphabet = base.union(&preset_alphabet);
        let (_, expr) = polycut::policy::preset_expr(name)?;
        let nfa = compile_nfa(&expr, &alphabet)?;
        return Ok((nfa, name.clone()));
    }
    if let Some(regex) = &args.policy_regex {
        let alphabet = base.union(&Alphabet::new(scan_tokens(regex))?);
        let expr = parse_policy(regex, &alphabet)?;
        let nfa = compile_nfa(&expr, &alphabet)?;
        return Ok((nfa, regex.clone()));
    }
    if let Some(path) = &args.policy_nfa {
        let text = read_file(path)?;
        let own = PolicyNfa::from_text(&text, None)?;
        let alphabet = base.union(own.alphabet());
        let nfa = PolicyNfa::from_text(&text, Some(alphabet))?;
        return Ok((nfa, path.display().to_string()));
    }
    unreachable!("clap enforces exactly one policy source")
}

fn cmd_transform(args: TransformArgs) -> Result<(), Error> {
    let g = load_graph(&args.graph)?;
    let (nfa, _desc) = resolve_policy(&args.policy, Some(g.alphabet()))?;
    let norm = nfa.normalize_terminals()?;
    let aug = augment_aggregators(&norm, &decompose_all(&norm))?;
    let tg = tensor_transform(&g, &aug, &args.source, &args.sink)?;
    let tg = if args.prune { prune_unreachable(&tg) } else { tg };

    let graph_text = tg.to_graph_text(&g, args.bound.into());
    let prov_text = tg.provenance_text(&g);
    fs::write(&args.out, graph_text)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", args.out.display())))?;
    let prov_path = args.out.with_extension(match args.out.extension() {
        Some(ext) => format!("{}.prov", ext.to_string_lossy()),
        None => "prov".to_string(),
    });
    fs::write(&prov_path, prov_text)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", prov_path.display())))?;
    println!(
        "product graph: {} nodes, {} edges ({} mapped, {} eps), source {}, sink {}",
        tg.node_count(),
        tg.edges().len(),
        tg.mapped_edge_count(),
        tg.epsilon_edge_count(),
        tg.node_name(tg.source()),
        tg.node_name(tg.sink()),
    );
    println!(
        "wrote {} and {}",
        args.out.display(),
        prov_path.display()
    );
    Ok(())
}

fn cmd_mincut(command: &str, args: MincutArgs, force_unit: bool) -> Result<(), Error> {
    let mut g = load_graph(&args.graph)?;
    if force_unit || args.unit_capacities {
        g = g.with_unit_capacities();
    }
    let (nfa, desc) = resolve_policy(&args.policy, Some(g.alphabet()))?;
    let report = min_cut_bounds(&g, &nfa, &args.source, &args.sink, &desc)?;
    match args.format {
        OutputFormat::Text => print!("{}", output::render_mincut_text(&g, &report)),
        OutputFormat::Json => print!("{}", output::to_json(&output::mincut_report(command, &g, &report))),
        OutputFormat::Csv => print!("{}", output::render_mincut_csv(&report)),
    }
    Ok(())
}

fn cmd_check_exact(args: CheckExactArgs) -> Result<(), Error> {
    let (nfa, desc) = resolve_policy(&args.policy, None)?;
    let norm = nfa.normalize_terminals()?;
    let decs = decompose_all(&norm);
    let report = output::check_exact_report(&desc, &norm, &decs);
    match args.format {
        OutputFormat::Json => print!("{}", output::to_json(&report)),
        _ => print!("{}", output::render_check_exact_text(&report)),
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), Error> {
    let g = load_graph(&args.graph)?;
    let (nfa, desc) = resolve_policy(&args.policy, Some(g.alphabet()))?;
    let limits = OracleLimits {
        max_search_states: args.max_search_states,
        max_paths: args.max_paths,
    };
    let max_len = args.max_len.unwrap_or_else(|| g.edge_count().max(1));
    let pset = enumerate_compliant_paths(&g, &nfa, &args.source, &args.sink, max_len, &limits)?;
    let diversity = max_disjoint_packing(&pset, &limits)?;
    let bisection = bisection_over_paths(&g, &pset, &limits)?;
    let report = output::OracleReport {
        schema_version: output::SCHEMA_VERSION,
        command: "oracle".to_string(),
        policy: desc,
        source: args.source.clone(),
        sink: args.sink.clone(),
        max_len,
        compliant_paths: pset
            .paths
            .iter()
            .map(|path| {
                let pf = polycut::flow::PathFlow {
                    edges: path.clone(),
                    flow: polycut::Rational::from_integer(0),
                };
                let r = output::path_report(&g, &pf);
                output::OraclePathReport {
                    hops: r.hops,
                    labels: r.labels,
                }
            })
            .collect(),
        diversity,
        bisection: bisection.to_string(),
    };
    match args.format {
        OutputFormat::Json => print!("{}", output::to_json(&report)),
        _ => print!("{}", output::render_oracle_text(&report)),
    }
    Ok(())
}

fn parse_asn_list(text: &str) -> Result<Vec<u32>, Error> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| Error::InvalidInput(format!("bad AS number `{s}`")))
        })
        .collect()
}

fn parse_depeer_pair(text: &str) -> Result<(u32, u32), Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "expected `ASN1:ASN2`, got `{text}`"
        )));
    }
    Ok((
        parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad AS number `{}`", parts[0])))?,
        parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad AS number `{}`", parts[1])))?,
    ))
}

fn load_as_graph(
    as_rel: &Path,
    augment: &Option<PathBuf>,
    class: &Option<String>,
) -> Result<LabeledDigraph, Error> {
    let rels = parse_as_rel(&read_file(as_rel)?)?;
    let mut g = to_labeled_graph(&rels);
    if let Some(members_path) = augment {
        let members = parse_peering_members(&read_file(members_path)?)?;
        let class: PeeringPolicy = class
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("--augment requires --class".to_string()))?
            .parse()?;
        g = augment_peering(&g, &members, class);
    }
    Ok(g)
}

fn load_weights(
    weights: &Option<PathBuf>,
    g: &LabeledDigraph,
) -> Result<WeightTable, Error> {
    let table = match weights {
        Some(path) => WeightTable::parse(&read_file(path)?)?,
        None => WeightTable::uniform(
            g.node_names()
                .filter_map(|n| n.parse::<u32>().ok())
                .collect::<Vec<_>>(),
        ),
    };
    // Sampling an AS outside the topology would always fail downstream.
    let present: BTreeSet<u32> = g
        .node_names()
        .filter_map(|n| n.parse::<u32>().ok())
        .collect();
    Ok(table.restricted_to(&present))
}

fn run_pool<T: Send, F: FnOnce() -> T + Send>(jobs: usize, f: F) -> Result<T, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))
        .map(|pool| pool.install(f))
}

fn cmd_experiment_diversity(args: ExperimentDiversityArgs) -> Result<(), Error> {
    let mut g = load_as_graph(&args.as_rel, &args.augment, &args.class)?;
    let mut depeered = Vec::new();
    for spec in &args.depeer {
        let (a, b) = parse_depeer_pair(spec)?;
        g = depeer(&g, a, b);
        depeered.push(format!("{a}:{b}"));
    }
    let weights = load_weights(&args.weights, &g)?;
    let pairs = weighted_sample_pairs(&weights, args.pairs, args.seed)?;
    let (nfa, desc) = resolve_policy(&args.policy, Some(g.alphabet()))?;

    let results: Result<Vec<output::PairResult>, Error> = run_pool(args.jobs, || {
        pairs
            .par_iter()
            .map(|(a, b)| {
                let report =
                    min_cut_bounds(&g, &nfa, &a.to_string(), &b.to_string(), &desc)?;
                Ok(output::PairResult {
                    source: report.source,
                    sink: report.sink,
                    lower: report.lower.to_string(),
                    upper: report.upper.to_string(),
                    exact: report.exact,
                })
            })
            .collect()
    })?;
    let rows = results?;

    // n_s / exactness verdict for the policy itself (graph independent).
    let norm = nfa.normalize_terminals()?;
    let decs = decompose_all(&norm);
    let n_s: BTreeMap<String, usize> = norm
        .alphabet()
        .iter()
        .map(|(sym, name)| (name.to_string(), decs[sym.0 as usize].block_count()))
        .collect();
    let exact = decs.iter().all(|d| d.exact());

    let lowers: Vec<f64> = rows
        .iter()
        .map(|r| output::rational_to_f64(&r.lower.parse().unwrap()))
        .collect();
    let uppers: Vec<f64> = rows
        .iter()
        .map(|r| output::rational_to_f64(&r.upper.parse().unwrap()))
        .collect();
    let (mu_lower, sigma_lower) = output::mean_stddev(&lowers);
    let (mu_upper, sigma_upper) = output::mean_stddev(&uppers);

    let report = output::DiversityExperimentReport {
        schema_version: output::SCHEMA_VERSION,
        command: "experiment diversity".to_string(),
        policy: desc,
        seed: args.seed,
        exact,
        n_s,
        summary: output::ExperimentSummary {
            pairs: rows.len(),
            mu_lower,
            sigma_lower,
            mu_upper,
            sigma_upper,
        },
        rows,
    };
    match args.format {
        OutputFormat::Json => print!("{}", output::to_json(&report)),
        _ => print!("{}", output::render_diversity_experiment_csv(&report)),
    }
    Ok(())
}

fn cmd_experiment_depeering(args: ExperimentDepeeringArgs) -> Result<(), Error> {
    let g = load_as_graph(&args.as_rel, &args.augment, &args.class)?;
    let side_a = parse_asn_list(&args.tier1_a)?;
    let side_b = parse_asn_list(&args.tier1_b)?;

    let cone_of_side = |side: &[u32], other: &[u32]| -> Result<BTreeSet<u32>, Error> {
        let other_set: BTreeSet<u32> = other.iter().copied().collect();
        let mut cone = BTreeSet::new();
        for asn in side {
            cone.extend(exclusive_customer_cone(&g, *asn, &other_set, args.cone_depth)?);
        }
        for asn in side.iter().chain(other.iter()) {
            cone.remove(asn);
        }
        Ok(cone)
    };
    let cone_a = cone_of_side(&side_a, &side_b)?;
    let cone_b = cone_of_side(&side_b, &side_a)?;

    let base_weights = load_weights(&args.weights, &g)?;
    let weights_a = base_weights.restricted_to(&cone_a);
    let weights_b = base_weights.restricted_to(&cone_b);
    let pairs = weighted_sample_pairs_between(&weights_a, &weights_b, args.pairs, args.seed)?;

    let mut after_graph = g.clone();
    let mut depeered = Vec::new();
    for a in &side_a {
        for b in &side_b {
            after_graph = depeer(&after_graph, *a, *b);
            depeered.push(format!("{a}:{b}"));
        }
    }

    let (nfa, desc) = resolve_policy(&args.policy, Some(g.alphabet()))?;
    let results: Result<Vec<output::DepeeringPairResult>, Error> = run_pool(args.jobs, || {
        pairs
            .par_iter()
            .map(|(a, b)| {
                let before =
                    min_cut_bounds(&g, &nfa, &a.to_string(), &b.to_string(), &desc)?;
                let after =
                    min_cut_bounds(&after_graph, &nfa, &a.to_string(), &b.to_string(), &desc)?;
                Ok(output::DepeeringPairResult {
                    source: a.to_string(),
                    sink: b.to_string(),
                    lower_before: before.lower.to_string(),
                    upper_before: before.upper.to_string(),
                    lower_after: after.lower.to_string(),
                    upper_after: after.upper.to_string(),
                })
            })
            .collect()
    })?;
    let rows = results?;

    let norm = nfa.normalize_terminals()?;
    let decs = decompose_all(&norm);
    let n_s: BTreeMap<String, usize> = norm
        .alphabet()
        .iter()
        .map(|(sym, name)| (name.to_string(), decs[sym.0 as usize].block_count()))
        .collect();
    let exact = decs.iter().all(|d| d.exact());

    let before: Vec<f64> = rows
        .iter()
        .map(|r| output::rational_to_f64(&r.upper_before.parse().unwrap()))
        .collect();
    let after: Vec<f64> = rows
        .iter()
        .map(|r| output::rational_to_f64(&r.upper_after.parse().unwrap()))
        .collect();
    let (mu_before, _) = output::mean_stddev(&before);
    let (mu_after, _) = output::mean_stddev(&after);
    let difference_pct = if mu_before == 0.0 {
        0.0
    } else {
        (mu_before - mu_after) / mu_before * 100.0
    };

    let report = output::DepeeringExperimentReport {
        schema_version: output::SCHEMA_VERSION,
        command: "experiment depeering".to_string(),
        policy: desc,
        seed: args.seed,
        exact,
        n_s,
        depeered,
        pairs: rows.len(),
        mu_upper_before: mu_before,
        mu_upper_after: mu_after,
        difference_pct,
        rows,
    };
    match args.format {
        OutputFormat::Json => print!("{}", output::to_json(&report)),
        _ => print!("{}", output::render_depeering_experiment_csv(&report)),
    }
    Ok(())
}
