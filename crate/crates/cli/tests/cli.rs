//! End-to-end checks of the binary: subcommands, exit codes and the
//! machine-readable output contract.

use std::path::PathBuf;
use std::process::{Command, Output};

fn csg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn repo_file(rel: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.pop();
    p.pop();
    p.push(rel);
    p.to_string_lossy().into_owned()
}

#[test]
fn examples_lists_builtins() {
    let out = csg(&["examples"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for name in ["sc-average", "sc-discounted", "indep-2p"] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
    assert!(text.contains("states"));
}

#[test]
fn solve_builtin_reports_known_costs() {
    let out = csg(&["solve", "--builtin", "sc-average", "--restarts", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("verdict: certified"));
    assert!(text.contains("4.4267") || text.contains("4.4268"), "{text}");
    assert!(text.contains("3.0278") || text.contains("3.0279"), "{text}");
}

#[test]
fn solve_document_output_is_versioned_and_deterministic() {
    let args = [
        "solve",
        "--builtin",
        "indep-2p",
        "--seed",
        "9",
        "--restarts",
        "6",
        "--format",
        "document",
    ];
    let a = csg(&args);
    let b = csg(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "fixed seed must be byte-identical");
    let doc: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["verdict"], "certified");
    assert_eq!(doc["seed"], 9);
    // round-trips through the document parser
    let parsed = csg_core::solver::CertificateDocument::from_json(&stdout(&a)).unwrap();
    assert_eq!(parsed.to_json(), stdout(&a).trim_end());
}

#[test]
fn verify_sample_strategies_passes() {
    let out = csg(&[
        "verify",
        "--game",
        &repo_file("games/patrol.json"),
        "--strategies",
        &repo_file("games/patrol-strategies.json"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("pass"));
}

#[test]
fn verify_bad_profile_soft_fails() {
    let dir = std::env::temp_dir();
    let path = dir.join("csg_bad_profile.json");
    // full weight on expensive actions: infeasible for the subscription bound
    std::fs::write(
        &path,
        r#"{"schema_version":1,"strategies":[[[0.0,1.0],[1.0,0.0]],[[1.0,0.0],[1.0,0.0]]]}"#,
    )
    .unwrap();
    let out = csg(&[
        "verify",
        "--builtin",
        "sc-average",
        "--strategies",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));
}

#[test]
fn simulate_at_certified_equilibrium_passes() {
    let out = csg(&[
        "simulate",
        "--builtin",
        "sc-average",
        "--horizon",
        "50000",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("pass"));
}

#[test]
fn export_programs() {
    let out = csg(&["export", "--builtin", "sc-average"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("program MP1"));

    let out = csg(&["export", "--builtin", "sc-average", "--program", "qp"]);
    assert!(stdout(&out).contains("] / 2"));

    let out = csg(&["export", "--builtin", "sc-discounted", "--program", "mp4"]);
    assert!(stdout(&out).contains("program MP4"));
    assert!(stdout(&out).contains("beta 0.5"));
}

#[test]
fn usage_and_file_exit_codes() {
    assert_eq!(csg(&["bogus"]).status.code(), Some(64));
    assert_eq!(csg(&["solve"]).status.code(), Some(64), "needs a source");
    assert_eq!(
        csg(&["solve", "--game", "/definitely/missing.json"])
            .status
            .code(),
        Some(66)
    );
    assert_eq!(csg(&["--help"]).status.code(), Some(0));
}

#[test]
fn criterion_override() {
    let out = csg(&[
        "solve",
        "--builtin",
        "sc-average",
        "--criterion",
        "discounted",
        "--beta",
        "0.5",
        "--restarts",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("discounted criterion"));
    assert!(text.contains("4.2083") || text.contains("4.2082"), "{text}");
}
