//! End-to-end tests of the `lexnet` binary on the toy fixture.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/toy")
        .join(name)
}

fn lexnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn base_args(out: &Path) -> Vec<String> {
    vec![
        "--features".into(),
        fixture("features.csv").display().to_string(),
        "--layer-file".into(),
        format!(
            "free_associations={}",
            fixture("free_associations.csv").display()
        ),
        "--layer-file".into(),
        format!("cooccurrence={}", fixture("cooccurrence.csv").display()),
        "--out".into(),
        out.display().to_string(),
    ]
}

fn run_ok(subcommand: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args: Vec<String> = vec![subcommand.into()];
    args.extend(base_args(out));
    args.extend(extra.iter().map(|s| s.to_string()));
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let output = lexnet(&argv);
    assert!(
        output.status.success(),
        "{subcommand} failed:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

#[test]
fn pipeline_writes_the_full_output_tree() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    run_ok(
        "pipeline",
        &out,
        &["--runs", "3", "--ensemble", "5", "--seed", "7"],
    );

    for file in [
        "ingest/words.csv",
        "ingest/rank.csv",
        "ingest/ingest_report.json",
        "ingest/manifest.json",
        "conformity/conformity.csv",
        "conformity/distribution.csv",
        "nullmodel/null_label_shuffle.csv",
        "nullmodel/null_rewire.csv",
        "cluster/clusters.csv",
        "cluster/cluster_meta.json",
        "quality/curves_full.csv",
        "quality/curves_meta.json",
        "walk/trace_struct_0000.csv",
        "walk/trace_cdi-maxsim_0002.csv",
        "evaluate/report.json",
        "evaluate/summary.csv",
        "evaluate/manifest.json",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }

    // manifests parse and carry the seed
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("evaluate/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["master_seed"], 7);
    assert_eq!(manifest["command"], "evaluate");
    assert!(manifest["wall_time_ms"].is_number());

    // words.csv covers the registry
    let words = std::fs::read_to_string(out.join("ingest/words.csv")).unwrap();
    assert_eq!(words.lines().count(), 13); // header + 12 words

    // summary mirrors the evaluation table shape
    let summary = std::fs::read_to_string(out.join("evaluate/summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("strategy,bin,accuracy,precision_relevant_fraction,recall_relevant_fraction")
    );
    // 4 strategies + baseline, 5 bins each
    assert_eq!(summary.lines().count(), 1 + 5 * 5);
}

#[test]
fn missing_input_file_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let output = lexnet(&[
        "ingest",
        "--features",
        "/nonexistent/features.csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    let record: serde_json::Value =
        serde_json::from_str(stderr.lines().last().unwrap()).expect("machine-readable error");
    assert_eq!(record["error"]["stage"], "ingest");
    assert!(
        record["error"]["message"]
            .as_str()
            .unwrap()
            .contains("/nonexistent/features.csv"),
        "stderr: {stderr}"
    );
}

#[test]
fn walk_traces_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (out_a, out_b) = (tmp.path().join("a"), tmp.path().join("b"));
    let extra = ["--strategy", "cdi-maxsim", "--runs", "3", "--seed", "7"];
    run_ok("walk", &out_a, &extra);
    run_ok("walk", &out_b, &extra);
    for r in 0..3 {
        let name = format!("walk/trace_cdi-maxsim_{r:04}.csv");
        let a = std::fs::read(out_a.join(&name)).unwrap();
        let b = std::fs::read(out_b.join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(!a.is_empty());
    }
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // config carries seed 1; the flag must win
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "features": fixture("features.csv"),
            "layer_files": {
                "free_associations": fixture("free_associations.csv")
            },
            "seed": 1,
            "runs": 2
        })
        .to_string(),
    )
    .unwrap();
    let output = lexnet(&[
        "ingest",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("ingest/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["master_seed"], 9);
    assert_eq!(manifest["config"]["runs"], 2); // config value kept
}

#[test]
fn layer_ablation_flag_drops_edges() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    run_ok("ingest", &out, &["--layers", "free_associations"]);
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("ingest/ingest_report.json")).unwrap(),
    )
    .unwrap();
    // cooccurrence-only edges are gone from the aggregate
    assert_eq!(report["aggregate_edges"], 10);

    let out_full = tmp.path().join("full");
    run_ok("ingest", &out_full, &[]);
    let full: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_full.join("ingest/ingest_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(full["aggregate_edges"], 16); // one edge overlaps both layers
}

#[test]
fn unknown_strategy_is_a_clean_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut args: Vec<String> = vec!["walk".into()];
    args.extend(base_args(&out));
    args.extend(["--strategy".into(), "teleport".into()]);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let output = lexnet(&argv);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("teleport"), "stderr: {stderr}");
}
