use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use causal_implicits::cli::load_constraints;
use causal_implicits::ring::{Budget, Ideal, MonomialOrder, Polynomial};
use tempfile::TempDir;

const COMMON_CAUSE: &str = "obs V1 2\nobs V2 2\nobs V3 2\nedge V3 V1\nedge V3 V2\n";
const CONFOUNDED_CHAIN: &str =
    "obs V1 2\nobs V2 2\nobs V3 2\nobs V4 2\nhidden U1 2\nedge V4 V3\nedge V3 V2\nedge V2 V1\nedge U1 V1\nedge U1 V3\n";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_causal-implicits"));
    c.env_remove("CAUSAL_IMPLICITS_BUDGET");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn derive_common_cause() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.txt", COMMON_CAUSE);
    let out = run(&["derive", "--graph", s(&g)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let set = load_constraints(&stdout(&out)).unwrap();
    let p = |x: &str| x.parse::<Polynomial<_>>().unwrap();
    let o = |a: u32, b: u32, c: u32| format!("p[|V1={a},V2={b},V3={c}]");
    let mut total = String::new();
    for v in ["1,1,1", "1,1,2", "1,2,1", "1,2,2", "2,1,1", "2,1,2", "2,2,1", "2,2,2"] {
        let v: Vec<u32> = v.split(',').map(|x| x.parse().unwrap()).collect();
        total.push_str(&o(v[0], v[1], v[2]));
        total.push_str(" + ");
    }
    let expected = Ideal::new([
        p(&format!("{}*{} - {}*{}", o(1, 1, 1), o(2, 2, 1), o(1, 2, 1), o(2, 1, 1))),
        p(&format!("{}*{} - {}*{}", o(1, 1, 2), o(2, 2, 2), o(1, 2, 2), o(2, 1, 2))),
        p(&format!("{total}(-1)").replace(" + (-1)", " - 1")),
    ]);
    assert!(set.ideal.equals(&expected, &MonomialOrder::GrevLex, &Budget::default()).unwrap());
}

#[test]
fn derive_is_deterministic_and_json_matches_text() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.txt", COMMON_CAUSE);
    let args = ["derive", "--graph", s(&g), "--intervene", "", "--intervene", "V1=1", "--method", "prop2"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let json = run(&[&args[..], &["--format", "json"]].concat());
    let from_json = load_constraints(&stdout(&json)).unwrap();
    let from_text = load_constraints(&stdout(&a)).unwrap();
    assert_eq!(from_json.generators(), from_text.generators());
    assert_eq!(from_json.requests.len(), 2);
}

#[test]
fn malformed_graph_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.txt", "obs A 2\nedge A\n");
    let out = run(&["derive", "--graph", s(&g)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
    let out = run(&["derive", "--graph", s(&dir.path().join("missing.txt"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["derive", "--graph", s(&g), "--method", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inapplicable_method_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.txt", CONFOUNDED_CHAIN);
    let out = run(&["derive", "--graph", s(&g), "--method", "prop1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("hidden"), "{}", stderr(&out));
}

#[test]
fn budget_exhaustion_exits_with_3() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.txt", COMMON_CAUSE);
    let out = run(&["derive", "--graph", s(&g), "--method", "direct", "--max-pairs", "2"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("budget"));
    let out = bin()
        .args(["derive", "--graph", s(&g), "--method", "direct"])
        .env("CAUSAL_IMPLICITS_BUDGET", "pairs=2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    // a flag beats the environment
    let out = bin()
        .args(["derive", "--graph", s(&g), "--method", "direct", "--max-pairs", "100000"])
        .env("CAUSAL_IMPLICITS_BUDGET", "pairs=2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = bin().args(["derive", "--graph", s(&g)]).env("CAUSAL_IMPLICITS_BUDGET", "pairs").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_then_check() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.txt", COMMON_CAUSE);
    let k = dir.path().join("k.json");
    let out = run(&["derive", "--graph", s(&g), "--all-interventions", "--format", "json", "--out", s(&k)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let t1 = run(&["simulate", "--graph", s(&g), "--seed", "5"]);
    let t2 = run(&["simulate", "--graph", s(&g), "--seed", "5"]);
    let t3 = run(&["simulate", "--graph", s(&g), "--seed", "6"]);
    assert_eq!(t1.stdout, t2.stdout);
    assert_ne!(t1.stdout, t3.stdout);
    let tables = write(dir.path(), "t.json", &stdout(&t1));
    let out = run(&["check", "--graph", s(&g), "--constraints", s(&k), "--tables", s(&tables)]);
    assert_eq!(out.status.code(), Some(0), "{}{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("0 failed (exact)"));

    let csv = dir.path().join("t.csv");
    run(&["simulate", "--graph", s(&g), "--seed", "5", "--format", "csv", "--out", s(&csv)]);
    let out = run(&["check", "--graph", s(&g), "--constraints", s(&k), "--tables", s(&csv), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["failed"], 0);
}

#[test]
fn check_catches_violations_and_bad_tables() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.txt", COMMON_CAUSE);
    let k = dir.path().join("k.txt");
    run(&["derive", "--graph", s(&g), "--out", s(&k)]);
    // V1 and V2 perfectly correlated within each V3 stratum
    let mut rows = String::from("V1,V2,V3,p\n");
    for v1 in 1..=2 {
        for v2 in 1..=2 {
            for v3 in 1..=2 {
                rows.push_str(&format!("{v1},{v2},{v3},{}\n", if v1 == v2 { "1/4" } else { "0" }));
            }
        }
    }
    let bad = write(dir.path(), "bad.csv", &rows);
    let out = run(&["check", "--graph", s(&g), "--constraints", s(&k), "--tables", s(&bad)]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stdout(&out).contains("FAIL"));

    let short = write(dir.path(), "short.csv", "V1,V2,V3,p\n1,1,1,1\n");
    let out = run(&["check", "--graph", s(&g), "--constraints", s(&k), "--tables", s(&short)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing the entry"), "{}", stderr(&out));

    let other = write(dir.path(), "other.txt", "obs V1 2\nobs V2 2\nobs V3 2\n");
    let out = run(&["check", "--graph", s(&other), "--constraints", s(&k), "--tables", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reduce_reports_the_walkthrough() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.txt", CONFOUNDED_CHAIN);
    let out = run(&["reduce", "--graph", s(&g), "--all-interventions", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ledger: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(ledger["parameter_count"], 240);
    assert_eq!(ledger["after_products"].as_array().unwrap().len(), 4 + 4 * 8);
    assert_eq!(ledger["residual"].as_array().unwrap().len(), 4 + 8 + 8);

    let plain = write(dir.path(), "plain.txt", "obs A 2\nobs B 2\nedge A B\n");
    let out = run(&["reduce", "--graph", s(&plain), "--intervene", "A=1", "--format", "json"]);
    let ledger: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(ledger["relations"].as_array().unwrap().is_empty());
}

#[test]
fn components_report() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.txt", CONFOUNDED_CHAIN);
    let out = run(&["components", "--graph", s(&g), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["c_components"], serde_json::json!([["V1", "V3"], ["V2"], ["V4"]]));
    assert_eq!(report["decomposable"], true);
    assert_eq!(report["subproblems"].as_array().unwrap().len(), 3);

    let plain = write(dir.path(), "plain.txt", COMMON_CAUSE);
    let out = run(&["components", "--graph", s(&plain), "--intervene", "V1=1", "--intervene", "V3=1"]);
    let text = stdout(&out);
    assert!(text.contains("c-components: {V1} {V2} {V3}"), "{text}");
    assert!(text.contains("request [V1=1]: free {V2,V3} ancestral yes"), "{text}");
    assert!(text.contains("request [V3=1]: free {V1,V2} ancestral no"), "{text}");

    let inside = write(dir.path(), "inside.txt", "obs A 2\nobs B 2\nhidden U\nedge U A\nedge U B\nedge A B\n");
    let out = run(&["components", "--graph", s(&inside)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("decomposable: no"));
}
