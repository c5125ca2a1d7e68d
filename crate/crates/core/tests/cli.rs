mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use common::fixture;

fn netgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netgap"))
        .args(args)
        .env("NETGAP_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// A 20-process model and a light configuration in a fresh directory.
fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("model.json");
    let out = netgap(&["gen-usecase", "--processes", "20", "--messages", "60", "--seed", "3", "--out", path(&model)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let config = serde_json::json!({
        "sp1": {"max_generations": 60, "population": 80, "secondary_generations": 30, "candidate_module_slots": 10},
        "sp2": {"max_epochs": 400},
        "sp3": {"population": 12, "max_generations": 2}
    });
    std::fs::write(dir.path().join("config.json"), config.to_string()).unwrap();
    dir
}

fn run_args<'a>(dir: &'a Path, grammar: &'a str, out: &'a str) -> Vec<String> {
    vec![
        "run".into(),
        "--model".into(),
        path(&dir.join("model.json")).into(),
        "--catalog".into(),
        path(&fixture("catalogs/standard.json")).into(),
        "--grammar".into(),
        grammar.into(),
        "--config".into(),
        path(&dir.join("config.json")).into(),
        "--out".into(),
        out.into(),
    ]
}

fn run(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    netgap(&refs)
}

#[test]
fn gen_usecase_writes_a_model() {
    let dir = workspace();
    let model = read_json(&dir.path().join("model.json"));
    assert_eq!(model["processes"].as_array().unwrap().len(), 20);
    assert_eq!(model["messages"].as_array().unwrap().len(), 60);
}

#[test]
fn run_writes_artifacts_and_exit_code_matches() {
    let dir = workspace();
    let out = dir.path().join("run");
    let grammar = fixture("grammars/segmented_mesh.grammar");
    let result = run(&run_args(dir.path(), path(&grammar), path(&out)));
    let report = read_json(&out.join("report.json"));
    let feasible = report["best"]["feasible"].as_bool().unwrap_or(false);
    assert_eq!(code(&result), if feasible { 0 } else { 2 }, "{}", String::from_utf8_lossy(&result.stderr));
    for file in ["allocation.json", "best_topology.json", "best_topology.dot", "comparison.csv", "run_log.jsonl"] {
        assert!(out.join(file).exists(), "{file}");
    }
    let log = std::fs::read_to_string(out.join("run_log.jsonl")).unwrap();
    let events: Vec<Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(events[0]["event"], "allocation");
    assert_eq!(events[1]["event"], "started");
    assert_eq!(events.last().unwrap()["event"], "finished");

    // Scoring the best topology again reproduces the stored report.
    let eval = netgap(&[
        "evaluate",
        "--topology",
        path(&out.join("best_topology.json")),
        "--allocation",
        path(&out.join("allocation.json")),
        "--catalog",
        path(&fixture("catalogs/standard.json")),
        "--config",
        path(&dir.path().join("config.json")),
    ]);
    let scored: Value = serde_json::from_slice(&eval.stdout).unwrap();
    let reward = scored["report"]["reward"].as_f64().unwrap();
    // With positive weights the reward is positive exactly when every gate passes.
    assert_eq!(code(&eval), if reward > 0.0 { 0 } else { 2 });
    if feasible {
        assert!(reward > 0.0);
    }

    // Resuming from the best topology keeps every vertex.
    let resumed = dir.path().join("resumed");
    let mut args = run_args(dir.path(), path(&grammar), path(&resumed));
    args.extend(["--initial-topology".into(), path(&out.join("best_topology.json")).into(), "--epochs".into(), "5".into()]);
    let again = run(&args);
    assert!(matches!(code(&again), 0 | 2));
    let start = read_json(&out.join("best_topology.json"));
    let end = read_json(&resumed.join("best_topology.json"));
    for v in start["vertices"].as_array().unwrap() {
        assert!(end["vertices"].as_array().unwrap().contains(v), "{v}");
    }
}

#[test]
fn grammar_without_start_rule_is_not_feasible() {
    let dir = workspace();
    let grammar = dir.path().join("no_start.grammar");
    std::fs::write(&grammar, "r0: S => S <-> M;\n").unwrap();
    let out = dir.path().join("run");
    let mut args = run_args(dir.path(), path(&grammar), path(&out));
    args.extend(["--epochs".into(), "50".into()]);
    let result = run(&args);
    assert_eq!(code(&result), 2);
    assert!(!out.join("best_topology.json").exists());
}

#[test]
fn unsatisfiable_allocation_is_not_feasible() {
    let dir = workspace();
    // One process needs more compute than any module offers.
    let model = serde_json::json!({
        "processes": [{"id": "p0", "part": "A", "period_ms": 10.0, "compute_demand_mops": 50.0}],
        "messages": []
    });
    std::fs::write(dir.path().join("model.json"), model.to_string()).unwrap();
    let out = dir.path().join("run");
    let result = run(&run_args(dir.path(), path(&fixture("grammars/segmented_mesh.grammar")), path(&out)));
    assert_eq!(code(&result), 2, "{}", String::from_utf8_lossy(&result.stderr));
}

#[test]
fn invalid_inputs_exit_one() {
    let dir = workspace();
    let out = dir.path().join("run");
    let wrong_labels = fixture("grammars/rewrite_examples.grammar");
    let result = run(&run_args(dir.path(), path(&wrong_labels), path(&out)));
    assert_eq!(code(&result), 1);
    assert!(String::from_utf8_lossy(&result.stderr).contains("labels not in the module catalog"));

    let broken = dir.path().join("broken.grammar");
    std::fs::write(&broken, "r0: phi => S\n").unwrap();
    assert_eq!(code(&run(&run_args(dir.path(), path(&broken), path(&out)))), 1);

    let mut args = run_args(dir.path(), path(&fixture("grammars/simple.grammar")), path(&out));
    args.extend(["--weights".into(), "1,2".into()]);
    assert_eq!(code(&run(&args)), 1 + 1, "clap rejects bad weights with its usage code");
}

#[test]
fn batch_and_compare_merge_tables() {
    let dir = workspace();
    let out = dir.path().join("batch");
    let result = netgap(&[
        "batch",
        "--model",
        path(&dir.path().join("model.json")),
        "--catalog",
        path(&fixture("catalogs/standard.json")),
        "--grammar",
        path(&fixture("grammars/segmented_mesh.grammar")),
        "--config",
        path(&dir.path().join("config.json")),
        "--epochs",
        "150",
        "--seed",
        "7",
        "--runs",
        "2",
        "--out",
        path(&out),
    ]);
    assert!(matches!(code(&result), 0 | 2), "{}", String::from_utf8_lossy(&result.stderr));
    let mut batch = csv::Reader::from_path(out.join("batch.csv")).unwrap();
    let seeds: Vec<String> = batch.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(seeds, ["7", "8"]);

    let merged = dir.path().join("merged.csv");
    let a = out.join("seed_7/comparison.csv");
    let b = out.join("seed_8/comparison.csv");
    let cmp = netgap(&["compare", "--out", path(&merged), path(&a), path(&b)]);
    assert_eq!(code(&cmp), 0);
    let mut reader = csv::Reader::from_path(&merged).unwrap();
    assert_eq!(&reader.headers().unwrap()[0], "run");
    let labels: Vec<String> = reader.records().map(|r| r.unwrap()[0].to_string()).collect();
    let count = |f: &Path| csv::Reader::from_path(f).unwrap().records().count();
    assert_eq!(labels.len(), count(&a) + count(&b));
    assert!(labels.iter().all(|l| l == "seed_7" || l == "seed_8"));
}
