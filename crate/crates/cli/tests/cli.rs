use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn pdbrep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdbrep")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn fact(rel: &str, args: &[i64], p: &str) -> Value {
    json!({ "rel": rel, "args": args, "p": p })
}

fn rs_files(dir: &TempDir) -> (PathBuf, PathBuf) {
    let pdb = json!({
        "kind": "ti",
        "facts": [
            fact("R", &[1, 1], "1"), fact("R", &[1, 2], "1"), fact("R", &[2, 2], "1"),
            fact("S", &[1], "1/2"), fact("S", &[2], "1/2"),
        ]
    });
    let view = json!({ "R_phi": { "head": ["x"], "body": "exists y: R(x,y) & S(y)" } });
    (write(dir, "rs.json", &pdb), write(dir, "view.json", &view))
}

#[test]
fn push_reproduces_the_rs_law() {
    let dir = TempDir::new().unwrap();
    let (pdb, view) = rs_files(&dir);
    let o = pdbrep(&["push", "--pdb", s(&pdb), "--view", s(&view)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout_json(&o);
    let mut masses: Vec<String> =
        out["worlds"].as_array().unwrap().iter().map(|w| w["p"].as_str().unwrap().to_string()).collect();
    masses.sort();
    assert_eq!(masses, ["1/2", "1/4", "1/4"]);
}

#[test]
fn bid_compiles_and_verifies() {
    let dir = TempDir::new().unwrap();
    let bid = json!({
        "kind": "bid",
        "blocks": [[fact("R", &[1], "1/2"), fact("R", &[2], "1/2")], [fact("R", &[3], "1/3")]]
    });
    let pdb = write(&dir, "bid.json", &bid);
    let o = pdbrep(&["compile", "--pdb", s(&pdb), "--target", "cti"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = write(&dir, "rep.json", &stdout_json(&o)["representation"]);
    let o = pdbrep(&["verify", "--pdb", s(&pdb), "--rep", s(&rep)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    // Against a different source the same representation fails to verify.
    let other = write(&dir, "other.json", &json!({ "kind": "bid", "blocks": [[fact("R", &[1], "1")]] }));
    assert_eq!(pdbrep(&["verify", "--pdb", s(&other), "--rep", s(&rep)]).status.code(), Some(1));
}

#[test]
fn check_dagger_exit_codes() {
    let dir = TempDir::new().unwrap();
    let inv = json!({
        "kind": "ti",
        "family": { "kind": "inverse_poly", "c": "1", "s": 2, "d": "1", "template": { "unary": "R" } }
    });
    let pdb = write(&dir, "inv.json", &inv);
    let o = pdbrep(&["check-dagger", "--pdb", s(&pdb), "--c", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["verdict"], "Diverges");

    let fam = write(&dir, "sq.json", &json!({ "kind": "world_family", "family": "square_exponential" }));
    assert_eq!(pdbrep(&["check-dagger", "--pdb", s(&fam), "--c", "1"]).status.code(), Some(0));
}

#[test]
fn sampling_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (pdb, _) = rs_files(&dir);
    let run = |seed: &str| pdbrep(&["sample", "--pdb", s(&pdb), "--seed", seed, "-n", "20"]).stdout;
    assert_eq!(run("7"), run("7"));
    assert!(!run("7").is_empty());
}

#[test]
fn errors_exit_with_two() {
    let o = pdbrep(&["push", "--pdb", "/nonexistent/pdb.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert_eq!(pdbrep(&["parse", "exists x: ("]).status.code(), Some(2));
}

#[test]
fn parse_reports_fragment() {
    let o = pdbrep(&["parse", "E(x,y) | E(y,x)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["fragment"], "UCQ");
}

#[test]
fn eval_condition_sets_exit_status() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "i.json", &json!([{ "rel": "A", "args": [1] }]));
    let holds = pdbrep(&["eval", "--instance", s(&inst), "--condition", "A(1)"]);
    assert_eq!(holds.status.code(), Some(0), "{}", String::from_utf8_lossy(&holds.stderr));
    assert_eq!(pdbrep(&["eval", "--instance", s(&inst), "--condition", "A(2)"]).status.code(), Some(1));
}
