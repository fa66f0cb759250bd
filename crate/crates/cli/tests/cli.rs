use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, contents).unwrap();
        p
    }
}

fn facecone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facecone")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn identity(m: usize) -> String {
    let rows: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| (i == j) as u8 as f64).collect()).collect();
    serde_json::json!({ "m": m, "entries": rows }).to_string()
}

fn cycle(m: usize) -> String {
    let edges: Vec<[usize; 2]> = (1..=m).map(|i| [i, i % m + 1]).collect();
    serde_json::json!({ "m": m, "edges": edges }).to_string()
}

#[test]
fn identity_on_five_cycle_is_member() {
    let ws = Workspace::new();
    let (a, g) = (ws.file("a.json", &identity(5)), ws.file("g.json", &cycle(5)));
    let out = facecone(&["membership", "--matrix", path(&a), "--structure", path(&g)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["member"], true);
    assert!(v["certificate"]["values"].is_array());
}

#[test]
fn counterexample_on_four_cycle_is_rejected() {
    let ws = Workspace::new();
    let out = facecone(&["counterexample", "--m", "4", "--rho", "-1.4"]);
    assert_eq!(out.status.code(), Some(0));
    let a = ws.file("a.json", std::str::from_utf8(&out.stdout).unwrap());
    let g = ws.file("g.json", &cycle(4));
    let out = facecone(&["membership", "--matrix", path(&a), "--structure", path(&g)]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["member"], false);
    let viol = &v["violation"];
    assert!(viol["edge"].is_array());
    assert!(viol["det_sigma"].as_f64().unwrap().min(viol["det_flipped"].as_f64().unwrap()) < 0.0);
}

#[test]
fn cycle_with_chord_is_undecidable() {
    let ws = Workspace::new();
    let a = ws.file("a.json", &identity(5));
    let g = ws.file("g.json", r#"{"m": 5, "edges": [[1,2],[2,3],[3,4],[4,5],[5,1],[1,3]]}"#);
    let out = facecone(&["membership", "--matrix", path(&a), "--structure", path(&g)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], "Undecidable");
}

#[test]
fn malformed_input_and_pattern_violation_exit_two() {
    let ws = Workspace::new();
    let bad = ws.file("bad.json", "{\"m\": 2,");
    let g = ws.file("g.json", &cycle(4));
    let out = facecone(&["membership", "--matrix", path(&bad), "--structure", path(&g)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], "InvalidInput");

    let dense = ws.file("d.json", r#"{"m": 4, "entries": [[1,0.1,0.1,0.1],[0.1,1,0.1,0.1],[0.1,0.1,1,0.1],[0.1,0.1,0.1,1]]}"#);
    let out = facecone(&["membership", "--matrix", path(&dense), "--structure", path(&g)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], "PatternViolation");

    let out = facecone(&["membership", "--matrix", "/nonexistent.json", "--structure", path(&g)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], "Io");
}

#[test]
fn non_psd_is_a_non_member() {
    let ws = Workspace::new();
    let a = ws.file("a.json", r#"{"m": 3, "entries": [[1,0.9,0],[0.9,1,0.9],[0,0.9,1]]}"#);
    let g = ws.file("g.json", r#"{"m": 3, "edges": [[1,2],[2,3]]}"#);
    let out = facecone(&["membership", "--matrix", path(&a), "--structure", path(&g)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["psd"], false);
}

#[test]
fn phi_then_chordal_fiber_round_trips() {
    let ws = Workspace::new();
    let c = ws.file("c.json", r#"{"m": 3, "facets": [[1, 2], [2, 3]]}"#);
    let p = ws.file(
        "p.json",
        r#"{"values": [{"face": [1, 2], "vertex": 1, "gamma": 0.5}, {"face": [1, 2], "vertex": 2, "gamma": -1.5},
                       {"face": [2, 3], "vertex": 2, "gamma": 2}, {"face": [2, 3], "vertex": 3, "gamma": 1},
                       {"face": [3], "vertex": 3, "gamma": 0.25}]}"#,
    );
    let out = facecone(&["phi", "--complex", path(&c), "--params", path(&p)]);
    assert_eq!(out.status.code(), Some(0));
    let sigma = json(&out);
    assert_eq!(sigma["entries"][0][1].as_f64(), Some(-0.75));
    assert_eq!(sigma["entries"][0][2].as_f64(), Some(0.0));
    let s = ws.file("s.json", std::str::from_utf8(&out.stdout).unwrap());
    let g = ws.file("g.json", r#"{"m": 3, "edges": [[1,2],[2,3]]}"#);
    let out = facecone(&["fiber", "--chordal", "--matrix", path(&s), "--graph", path(&g)]);
    assert_eq!(out.status.code(), Some(0));
    let q = ws.file("q.json", std::str::from_utf8(&out.stdout).unwrap());
    let out = facecone(&["phi", "--complex", path(&g), "--params", path(&q)]);
    let back = json(&out);
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = (sigma["entries"][i][j].as_f64().unwrap(), back["entries"][i][j].as_f64().unwrap());
            assert!((a - b).abs() < 1e-12, "({i},{j}): {a} vs {b}");
        }
    }
}

#[test]
fn cycle_commands() {
    let ws = Workspace::new();
    let a = ws.file("a.json", &identity(4));
    let out = facecone(&["cycle-check", "--matrix", path(&a)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["flip_determinants"].as_array().unwrap().len(), 4);
    let out = facecone(&["cycle-fiber", "--matrix", path(&a)]);
    assert_eq!(json(&out).as_array().unwrap().len(), 2);
    let out = facecone(&["cycle-fiber", "--matrix", path(&a), "--expand"]);
    assert_eq!(json(&out).as_array().unwrap().len(), 32);
}

#[test]
fn quotient_and_schur_witness() {
    let ws = Workspace::new();
    let c = ws.file("c.json", &cycle(4));
    let out = facecone(&["quotient", "--input", path(&c), "--u", "4"]);
    assert_eq!(json(&out)["edges"].as_array().unwrap().len(), 3);
    let e = ws.file("e.json", r#"{"m": 4, "facets": [[1,2],[2,3],[3,4],[1,4]]}"#);
    let out = facecone(&["quotient", "--input", path(&e), "--u", "4"]);
    assert_eq!(json(&out)["facets"].as_array().unwrap().len(), 3);
    let p = ws.file(
        "p.json",
        r#"{"values": [{"face": [1,4], "vertex": 1, "gamma": 1}, {"face": [1,4], "vertex": 4, "gamma": 1},
                       {"face": [3,4], "vertex": 3, "gamma": 1}, {"face": [3,4], "vertex": 4, "gamma": 1},
                       {"face": [1,2], "vertex": 1, "gamma": 1}, {"face": [1,2], "vertex": 2, "gamma": 1}]}"#,
    );
    let out = facecone(&["schur-witness", "--complex", path(&e), "--params", path(&p), "--u", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["vertices"], serde_json::json!([1, 2, 3]));
    assert!(v["params"]["values"].is_array());
}

#[test]
fn latent_commands() {
    let ws = Workspace::new();
    let c = ws.file("c.json", r#"{"m": 3, "facets": [[1, 2], [2, 3]]}"#);
    let out = facecone(&["digraph", "--complex", path(&c)]);
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("->").count(), 4);
    let p = ws.file("p.json", r#"{"values": [{"face": [1, 2], "vertex": 1, "gamma": 1}, {"face": [2], "vertex": 2, "gamma": 1}]}"#);
    let a = facecone(&["simulate", "--complex", path(&c), "--params", path(&p), "--n", "5000", "--seed", "3"]);
    let b = facecone(&["simulate", "--complex", path(&c), "--params", path(&p), "--n", "5000", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["entries"][2][2].as_f64(), Some(0.0));
}

#[test]
fn volume_is_deterministic_across_workers() {
    let a = facecone(&["volume", "--m", "4", "--samples", "3000", "--seed", "9", "--workers", "1"]);
    let b = facecone(&["volume", "--m", "4", "--samples", "3000", "--seed", "9", "--workers", "4"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["samples_psd"], 3000);
    assert_eq!(v["seed"], 9);
}

#[test]
fn volume_table_text() {
    let out = facecone(&["volume", "--table", "--samples", "1000"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("m "));
}

#[test]
fn selftest_default_passes() {
    let out = facecone(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("PASS").count(), 4);
}

#[test]
fn selftest_perturbation_fails_determinant_suite() {
    let out = facecone(&["selftest", "--perturb", "--json"]);
    assert_ne!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v[0]["suite"], "determinant-expansion");
    assert!(v[0]["failures"].as_u64().unwrap() > 0);
}

#[test]
fn selftest_cycle_suite_only() {
    let out = facecone(&["selftest", "--suite", "cycle", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let names: Vec<String> = json(&out)
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["suite"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(names, ["determinant-expansion", "discriminant", "round-trip"]);
}

#[test]
fn output_is_byte_identical() {
    let ws = Workspace::new();
    let a = ws.file("a.json", &identity(5));
    let g = ws.file("g.json", &cycle(5));
    let args = ["membership", "--matrix", path(&a), "--structure", path(&g)];
    assert_eq!(facecone(&args).stdout, facecone(&args).stdout);
}
