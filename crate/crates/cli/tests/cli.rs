use std::path::Path;
use std::process::{Command, Output};

use cram_core::neem::{episode_rows, NeemStore};
use serde_json::Value;

fn cram(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cram")).args(args).output().expect("cram runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn records(text: &str, tag: &str) -> Vec<Value> {
    text.lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|v| v["record"] == tag)
        .collect()
}

fn run_into(dir: &Path, plan: &str, gm: &str, seeds: &str) -> Output {
    cram(&["run", "--plan", plan, "--gm", gm, "--seed", seeds, "--json", "--neem-dir", dir.to_str().unwrap()])
}

#[test]
fn query_counts_match_a_plain_scan() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(dir.path(), "milk-from-fridge", "epl", "0..6");
    assert_eq!(o.status.code(), Some(0));
    let store = NeemStore::open(dir.path()).unwrap();
    let rows = episode_rows(store.neems());
    for (q, field, value) in [
        ("count episodes outcome=succeeded", "outcome", "succeeded"),
        ("count episodes gm=epl", "gm", "epl"),
        ("count episodes repositions=2", "repositions", "2"),
    ] {
        let expected = rows.iter().filter(|r| r[field] == value).count();
        let o = cram(&["neem", "query", "--neem-dir", dir.path().to_str().unwrap(), q]);
        assert_eq!(stdout(&o).trim(), expected.to_string(), "{q}");
    }
    let o = cram(&["neem", "query", "--neem-dir", dir.path().to_str().unwrap(), "mean episodes repositions"]);
    let mean = rows.iter().map(|r| r["repositions"].parse::<f64>().unwrap()).sum::<f64>() / rows.len() as f64;
    assert_eq!(stdout(&o).trim(), format!("{mean:.4}"));
}

#[test]
fn failed_count_matches_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(dir.path(), "tray", "uninformed", "0..3");
    assert_eq!(o.status.code(), Some(2), "failed runs exit 2");
    let summary = &records(&stdout(&o), "summary")[0];
    let o = cram(&["neem", "query", "--neem-dir", dir.path().to_str().unwrap(), "count episodes outcome=Failed"]);
    assert_eq!(stdout(&o).trim(), summary["failures"].to_string());
    assert_eq!(summary["failures"], 3);
}

#[test]
fn empty_store_has_no_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = cram(&["neem", "query", "--neem-dir", dir.path().to_str().unwrap(), "success-rate episodes"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "no data");
}

#[test]
fn identical_specs_give_identical_reports() {
    let args = ["run", "--plan", "tray", "--gm", "prospective", "--seed", "0..5", "--json"];
    let a = cram(&args);
    let b = cram(&[&args[..], &["--threads", "1"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn summary_is_recomputable_from_rows() {
    let o = cram(&["run", "--plan", "milk-from-fridge", "--seed", "0..8", "--json"]);
    let text = stdout(&o);
    let runs = records(&text, "run");
    let summary = &records(&text, "summary")[0];
    assert_eq!(runs.len(), 8);
    let col = |k: &str| runs.iter().map(|r| r[k].as_f64().unwrap()).collect::<Vec<_>>();
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    assert!((summary["mean_repositions"].as_f64().unwrap() - mean(col("repositions"))).abs() < 1e-12);
    assert!((summary["mean_retries"].as_f64().unwrap() - mean(col("retries"))).abs() < 1e-12);
    let ok = runs.iter().filter(|r| r["success"] == true).count();
    assert_eq!(summary["successes"], ok);
}

#[test]
fn same_model_twice_is_not_significant() {
    let o = cram(&["compare", "--plan", "milk-from-fridge", "--seed", "0..30", "--gm", "epl,epl", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    for t in records(&stdout(&o), "test") {
        assert!(t["p"].as_f64().unwrap() >= 0.05, "{t}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cram(&["compare", "--seed", "0..10"]).status.code(), Some(1));
    assert_eq!(cram(&["run", "--seed", "3..3"]).status.code(), Some(1));
    assert_eq!(cram(&["run", "--gm", "experience"]).status.code(), Some(1));
    assert_eq!(cram(&["run", "--plan", "no-such-plan.cpl"]).status.code(), Some(1));
    assert_eq!(cram(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cram(&["--help"]).status.code(), Some(0));
}

#[test]
fn validate_rejects_a_broken_plan() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cpl");
    std::fs::write(&bad, "(seq (perform (an action (type juggling))))").unwrap();
    assert_eq!(cram(&["validate", "set-table", "kitchen-dishes"]).status.code(), Some(0));
    assert_eq!(cram(&["validate", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn replay_detects_a_tampered_episode() {
    let dir = tempfile::tempdir().unwrap();
    run_into(dir.path(), "milk-from-fridge", "epl", "1");
    let d = dir.path().to_str().unwrap();
    assert_eq!(cram(&["neem", "replay", "--neem-dir", d]).status.code(), Some(0));
    let file = dir.path().join("neem-000000.ndjson");
    let text = std::fs::read_to_string(&file).unwrap();
    // Rename the milk in the recorded initial world.
    let tampered = text.replacen("milk-1", "milk-9", 1);
    assert_ne!(text, tampered);
    std::fs::write(&file, tampered).unwrap();
    let o = cram(&["neem", "replay", "--neem-dir", d]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn experience_trains_from_a_store() {
    let dir = tempfile::tempdir().unwrap();
    run_into(dir.path(), "milk-from-fridge", "epl", "100..110");
    let o = cram(&[
        "run", "--plan", "milk-from-fridge", "--gm", "experience", "--seed", "0..3", "--train-from",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}
