// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dagsmooth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dagsmooth")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn chain_fixture(dir: &Path) -> (String, String) {
    let g = write(dir, "chain.graph", "# three-node chain\nnodes 3\nedge a b\nedge b c\n");
    let p = write(dir, "chain.csv", "node,p\na,0.01\nb,0.02\nc,0.9\n");
    (g, p)
}

#[test]
fn select_dagger_fisher_on_chain() {
    let dir = TempDir::new().unwrap();
    let (g, p) = chain_fixture(dir.path());
    let out = dir.path().join("sel.json");
    let o = dagsmooth(&[
        "select", "--graph", &g, "--pvalues", &p, "--method", "fdr-dagger", "--alpha", "0.1", "--smoothing", "fisher",
        "--out", out.to_str().unwrap(), "--deterministic",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["rejected"], serde_json::json!(["a", "b"]));
    assert_eq!(doc["method"], "fdr-dagger");
    assert_eq!(doc["labels"], serde_json::json!(["a", "b", "c"]));
    assert!(doc.get("timestamp").is_none());
}

#[test]
fn select_is_byte_identical_under_deterministic() {
    let dir = TempDir::new().unwrap();
    let (g, p) = chain_fixture(dir.path());
    let run = || {
        let o = dagsmooth(&[
            "select", "--graph", &g, "--pvalues", &p, "--method", "fdx", "--alpha", "0.2", "--smoothing", "stouffer",
            "--deterministic",
        ]);
        assert!(o.status.success());
        o.stdout
    };
    assert_eq!(run(), run());
    let o = dagsmooth(&["select", "--graph", &g, "--pvalues", &p, "--method", "bh", "--alpha", "0.2"]);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(doc["timestamp"].as_u64().unwrap() > 0);
}

#[test]
fn smooth_none_is_identity() {
    let dir = TempDir::new().unwrap();
    let (g, p) = chain_fixture(dir.path());
    let out = dir.path().join("s.csv");
    let o = dagsmooth(&["smooth", "--graph", &g, "--pvalues", &p, "--smoothing", "none", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(out).unwrap(), fs::read_to_string(&p).unwrap());
}

#[test]
fn smooth_fisher_lowers_the_root() {
    let dir = TempDir::new().unwrap();
    let (g, p) = chain_fixture(dir.path());
    let o = dagsmooth(&["smooth", "--graph", &g, "--pvalues", &p, "--smoothing", "fisher"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "node,p");
    assert_eq!(lines[3], "c,0.9");
    let root: f64 = lines[1].strip_prefix("a,").unwrap().parse().unwrap();
    assert!(root > 0.0 && root < 1.0);
}

#[test]
fn simulate_with_zero_trials_is_a_usage_error() {
    let o = dagsmooth(&["simulate", "--recipe", "deep_tree:3:2", "--trials", "0", "--alphas", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_writes_one_row_per_cell() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench.csv");
    let args = [
        "simulate", "--recipe", "deep_tree:4:2", "--scheme", "global_normal", "--trials", "20", "--alphas", "0.05,0.1",
        "--seed", "4", "--out", out.to_str().unwrap(),
    ];
    assert!(dagsmooth(&args).status.success());
    let first = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = first.lines().collect();
    assert!(rows[0].starts_with("recipe,scheme,smoothing,method,alpha,trials,power,err_fwer,err_fdx,err_fdr,se_"));
    // 2 smoothings x 4 methods x 2 alphas.
    assert_eq!(rows.len(), 1 + 16);
    assert!(dagsmooth(&args).status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), first);
}

#[test]
fn input_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let (g, _) = chain_fixture(dir.path());
    let bad = write(dir.path(), "bad.csv", "node,p\na,1.2\nb,0.1\nc,0.3\n");
    let o = dagsmooth(&["smooth", "--graph", &g, "--pvalues", &bad]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside [0, 1]"));
    let missing = write(dir.path(), "missing.csv", "node,p\na,0.1\nb,0.1\n");
    let o = dagsmooth(&["smooth", "--graph", &g, "--pvalues", &missing]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`c`"));
    let cyclic = write(dir.path(), "cyc.graph", "nodes 2\nedge a b\nedge b a\n");
    let o = dagsmooth(&["smooth", "--graph", &cyclic, "--pvalues", &missing]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(dagsmooth(&["select", "--method", "nope"]).status.code(), Some(2));
    assert_eq!(dagsmooth(&["frobnicate"]).status.code(), Some(2));
    let o = dagsmooth(&["simulate", "--trials", "5", "--smoothings", "ruger:0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_reference_passes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ref.json");
    let o = dagsmooth(&[
        "validate", "--check", "reference", "--graph-recipe", "layered_random:4:8:2", "--instances", "20", "--seed", "3",
        "--deterministic", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["check"], "reference");
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["report"].as_array().unwrap().len(), 20);
}

#[test]
fn validate_error_control_rejects_uncovered_method() {
    let o = dagsmooth(&["validate", "--check", "error-control", "--target", "fwer", "--methods", "bh", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_failure_exits_1() {
    // Fisher assumes independence; positively correlated nulls on a chain
    // make it anti-conservative.
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("su.json");
    let o = dagsmooth(&[
        "validate", "--check", "superuniform", "--graph-recipe", "deep_tree:5:1", "--null-model", "copula",
        "--smoothing", "fisher", "--draws", "50000", "--deterministic", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let doc: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["pass"], false);
    let o = dagsmooth(&[
        "validate", "--check", "superuniform", "--graph-recipe", "deep_tree:5:1", "--null-model", "copula",
        "--smoothing", "cons-stouffer", "--draws", "50000", "--deterministic",
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn validate_error_control_passes_for_dagger() {
    let o = dagsmooth(&[
        "validate", "--check", "error-control", "--target", "fdr", "--recipe", "deep_tree:5:2", "--methods",
        "fdr-dagger", "--smoothings", "fisher", "--alphas", "0.1", "--trials", "200", "--deterministic",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn validate_with_too_few_draws_is_a_usage_error() {
    let o = dagsmooth(&["validate", "--check", "superuniform", "--smoothing", "none", "--draws", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_prds_writes_probe_report() {
    let o = dagsmooth(&[
        "validate", "--check", "prds", "--graph-recipe", "deep_tree:3:2", "--smoothing", "fisher", "--null-node", "1",
        "--probes", "5", "--seed", "9", "--deterministic",
    ]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["check"], "prds");
    assert_eq!(doc["report"]["probes"].as_array().unwrap().len(), 5);
    assert_eq!(doc["report"]["null_node"], 1);
}
