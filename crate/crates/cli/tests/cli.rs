//! End-to-end checks of the binary: exit codes, output schemas, policy
//! sources, and error records.

use std::path::PathBuf;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_polycut");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

struct Fixtures {
    _dir: tempfile::TempDir,
    triangle: PathBuf,
    nfa: PathBuf,
    asrel: PathBuf,
    members: PathBuf,
    weights: PathBuf,
}

fn fixtures() -> Fixtures {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, content: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, content).unwrap();
        p
    };
    let triangle = write(
        "tri.txt",
        "A|B|c2p|1\nB|A|p2c|1\nB|C|p2c|1\nC|B|c2p|1\nA|C|p2p|1\nC|A|p2p|1\n",
    );
    // Hand-written valley-free automaton with two accepting states.
    let nfa = write(
        "vf.nfa",
        "start: up\naccept: up down\nup c2p up\nup p2p down\nup p2c down\ndown p2c down\n",
    );
    let asrel = write(
        "asrel.txt",
        "1|2|0\n1|11|-1\n1|12|-1\n11|111|-1\n2|21|-1\n2|22|-1\n21|211|-1\n",
    );
    let members = write("members.csv", "asn,policy\n11,open\n21,open\n12,selective\n");
    let weights = write("weights.csv", "asn,address_count\n11,50\n21,30\n111,10\n211,10\n");
    Fixtures {
        _dir: dir,
        triangle,
        nfa,
        asrel,
        members,
        weights,
    }
}

#[test]
fn mincut_json_matches_expected_values() {
    let f = fixtures();
    let out = run(&[
        "mincut",
        "--graph",
        f.triangle.to_str().unwrap(),
        "--preset",
        "valley-free",
        "--source",
        "A",
        "--sink",
        "C",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], serde_json::json!(1));
    assert_eq!(v["lower"], serde_json::json!("2"));
    assert_eq!(v["upper"], serde_json::json!("2"));
    assert_eq!(v["exact"], serde_json::json!(true));
    // Every report embeds the policy, the n_s values and the verdict.
    assert_eq!(v["policy"], serde_json::json!("valley-free"));
    assert!(v["n_s"].is_object());
    assert_eq!(v["paths"].as_array().unwrap().len(), 2);
}

#[test]
fn policy_nfa_file_agrees_with_preset() {
    let f = fixtures();
    let from_file = run(&[
        "mincut",
        "--graph",
        f.triangle.to_str().unwrap(),
        "--policy-nfa",
        f.nfa.to_str().unwrap(),
        "--source",
        "A",
        "--sink",
        "C",
        "--format",
        "csv",
    ]);
    assert!(from_file.status.success());
    let text = String::from_utf8(from_file.stdout).unwrap();
    assert!(text.contains("A,C,2,2,true"), "got: {text}");
}

#[test]
fn diversity_ignores_file_capacities() {
    let f = fixtures();
    let fat = f.triangle.parent().unwrap().join("fat.txt");
    std::fs::write(
        &fat,
        "A|B|c2p|7\nB|A|p2c|7\nB|C|p2c|7\nC|B|c2p|7\nA|C|p2p|7\nC|A|p2p|7\n",
    )
    .unwrap();
    let bisection = run(&[
        "mincut", "--graph", fat.to_str().unwrap(), "--preset", "valley-free", "--source",
        "A", "--sink", "C", "--format", "csv",
    ]);
    assert!(String::from_utf8(bisection.stdout).unwrap().contains("A,C,14,14,true"));
    let diversity = run(&[
        "diversity", "--graph", fat.to_str().unwrap(), "--preset", "valley-free",
        "--source", "A", "--sink", "C", "--format", "csv",
    ]);
    assert!(String::from_utf8(diversity.stdout).unwrap().contains("A,C,2,2,true"));
}

#[test]
fn exit_codes_follow_the_contract() {
    let f = fixtures();
    // Usage errors: unknown subcommand, conflicting policy sources, none.
    assert_eq!(run(&["nonsense"]).status.code(), Some(1));
    assert_eq!(
        run(&[
            "check-exact",
            "--preset",
            "any",
            "--policy-regex",
            "c2p*",
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(run(&["check-exact"]).status.code(), Some(1));
    // Data errors: missing file, unknown node, unknown preset, bad regex.
    assert_eq!(
        run(&[
            "mincut", "--graph", "/nonexistent.txt", "--preset", "any", "--source", "A",
            "--sink", "B",
        ])
        .status
        .code(),
        Some(2)
    );
    let bad_node = run(&[
        "mincut",
        "--graph",
        f.triangle.to_str().unwrap(),
        "--preset",
        "any",
        "--source",
        "A",
        "--sink",
        "Z",
        "--format",
        "json",
    ]);
    assert_eq!(bad_node.status.code(), Some(2));
    // Structured error record on stderr for JSON format.
    let err: serde_json::Value =
        serde_json::from_slice(&bad_node.stderr).expect("stderr must be a JSON record");
    assert!(err["error"].as_str().unwrap().contains("unknown node"));
    assert_eq!(run(&["check-exact", "--preset", "bogus"]).status.code(), Some(2));
    assert_eq!(
        run(&["check-exact", "--policy-regex", "a**)"]).status.code(),
        Some(2)
    );
}

#[test]
fn source_equals_sink_is_a_data_error() {
    let f = fixtures();
    let out = run(&[
        "mincut",
        "--graph",
        f.triangle.to_str().unwrap(),
        "--preset",
        "any",
        "--source",
        "A",
        "--sink",
        "A",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("source and sink"));
}

#[test]
fn transform_writes_graph_and_sidecar() {
    let f = fixtures();
    let out_path = f.triangle.parent().unwrap().join("gprime.txt");
    let out = run(&[
        "transform",
        "--graph",
        f.triangle.to_str().unwrap(),
        "--policy-regex",
        "c2p* p2p? p2c*",
        "--source",
        "A",
        "--sink",
        "C",
        "--out",
        out_path.to_str().unwrap(),
        "--prune",
    ]);
    assert!(out.status.success());
    let graph_text = std::fs::read_to_string(&out_path).unwrap();
    assert!(graph_text.lines().count() > 0);
    for line in graph_text.lines() {
        assert_eq!(line.split('|').count(), 4);
        assert!(line.contains('@'), "product nodes are named v@q: {line}");
    }
    let prov = std::fs::read_to_string(out_path.with_extension("txt.prov")).unwrap();
    assert_eq!(prov.lines().count(), graph_text.lines().count());
    assert!(prov.lines().any(|l| l.contains("edge ")));
}

#[test]
fn oracle_explosion_guard_is_a_data_error() {
    let f = fixtures();
    let out = run(&[
        "oracle",
        "--graph",
        f.triangle.to_str().unwrap(),
        "--preset",
        "any",
        "--source",
        "A",
        "--sink",
        "C",
        "--max-paths",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("limit"));
}

#[test]
fn experiment_with_augment_weights_and_depeer() {
    let f = fixtures();
    let out = run(&[
        "experiment",
        "diversity",
        "--as-rel",
        f.asrel.to_str().unwrap(),
        "--preset",
        "multiple-peering-links",
        "--pairs",
        "12",
        "--seed",
        "3",
        "--weights",
        f.weights.to_str().unwrap(),
        "--augment",
        f.members.to_str().unwrap(),
        "--class",
        "open",
        "--depeer",
        "1:2",
        "--format",
        "json",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 12);
    assert_eq!(v["exact"], serde_json::json!(true));
    assert_eq!(v["summary"]["pairs"], serde_json::json!(12));
    // Weighted endpoints come only from the weight table's support.
    for row in v["rows"].as_array().unwrap() {
        for key in ["source", "sink"] {
            let asn = row[key].as_str().unwrap();
            assert!(["11", "21", "111", "211"].contains(&asn));
        }
    }
}

#[test]
fn augment_requires_class() {
    let f = fixtures();
    let out = run(&[
        "experiment",
        "diversity",
        "--as-rel",
        f.asrel.to_str().unwrap(),
        "--preset",
        "valley-free",
        "--pairs",
        "1",
        "--augment",
        f.members.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "clap enforces --class");
}
