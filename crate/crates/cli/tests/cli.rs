use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nestlogit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn example(dir: &Path, name: &str) -> PathBuf {
    let path = dir.join(format!("{name}.json"));
    let out = run(&["generate", "--example", name, "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    path
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn validate_reports_metrics_and_rejects_bad_files() {
    let dir = TempDir::new().unwrap();
    let five = example(dir.path(), "five-node");
    let out = run(&["validate", five.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["results"]["nodes"], 5);
    assert_eq!(r["results"]["height"], 2);

    let lam = write(dir.path(), "lam.json", r#"{"root": {"id": "r", "lambda": 1, "children": [
        {"id": "n", "lambda": 1.5, "children": [{"id": "a", "utility": 0}]}]}}"#);
    let out = run(&["validate", lam.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));

    let dup = write(dir.path(), "dup.json", r#"{"root": {"id": "r", "lambda": 1, "children": [
        {"id": "x", "utility": 0}, {"id": "x", "utility": 1}]}}"#);
    let out = run(&["validate", dup.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate"), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&["validate", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn generated_models_always_validate() {
    let dir = TempDir::new().unwrap();
    for seed in 0..20 {
        let p = dir.path().join(format!("r{seed}.json"));
        assert!(run(&["generate", "--random", &seed.to_string(), "--out", p.to_str().unwrap()]).status.success());
        assert!(run(&["validate", p.to_str().unwrap()]).status.success(), "seed {seed}");
    }
}

#[test]
fn probs_analytic_and_overrides() {
    let dir = TempDir::new().unwrap();
    let sl = example(dir.path(), "single-layer");
    let r = json(&run(&["probs", sl.to_str().unwrap()]));
    let p = &r["results"]["probabilities"];
    assert!((f(&p["1"]) - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
    assert!((f(&p["3"]) - (2f64.sqrt() - 1.0)).abs() < 1e-15);

    let logit = write(dir.path(), "logit.json", r#"{"root": {"id": "r", "lambda": 1, "children": [
        {"id": "a", "utility": 0.5}, {"id": "b", "utility": -1}, {"id": "c", "utility": 2}]}}"#);
    let r = json(&run(&["probs", logit.to_str().unwrap(), "--utilities", "b=3"]));
    let z: f64 = [0.5f64, 3.0, 2.0].iter().map(|u| u.exp()).sum();
    assert!((f(&r["results"]["probabilities"]["b"]) - 3f64.exp() / z).abs() < 1e-15);
    assert_eq!(r["inputs"]["utilities"], "b=3");
}

#[test]
fn probs_mc_needs_seed_and_mixed_needs_single_layer() {
    let dir = TempDir::new().unwrap();
    let reference = example(dir.path(), "reference");
    assert_eq!(run(&["probs", reference.to_str().unwrap(), "--method", "mc", "--draws", "10"]).status.code(), Some(1));
    let out = run(&["probs", reference.to_str().unwrap(), "--method", "mixed", "--draws", "10", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("shape"));
}

#[test]
fn emax_reports_node_and_all_utilities() {
    let dir = TempDir::new().unwrap();
    let reference = example(dir.path(), "reference");
    let r = json(&run(&["emax", reference.to_str().unwrap(), "--all"]));
    assert!((f(&r["results"]["value"]) - 0.937571).abs() < 1e-5);
    assert!((f(&r["results"]["utilities"]["b"]) - 0.173287).abs() < 1e-6);
    assert!((f(&r["results"]["utilities"]["a"]) - 0.440687).abs() < 1e-6);
    let r = json(&run(&["emax", reference.to_str().unwrap(), "--node", "b"]));
    assert!((f(&r["results"]["value"]) - 4f64.ln() / 8.0).abs() < 1e-15);
    assert_eq!(run(&["emax", reference.to_str().unwrap(), "--node", "zz"]).status.code(), Some(1));

    let single = write(dir.path(), "one.json", r#"{"root": {"id": "r", "lambda": 1, "children": [{"id": "a", "utility": 1.25}]}}"#);
    assert_eq!(f(&json(&run(&["emax", single.to_str().unwrap()]))["results"]["value"]), 1.25);
}

#[test]
fn grad_check_and_cdf() {
    let dir = TempDir::new().unwrap();
    let reference = example(dir.path(), "reference");
    let out = run(&["grad-check", reference.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["results"]["passed"], true);

    let by_id = json(&run(&["cdf", reference.to_str().unwrap(), "--at", "leaf0=0,leaf1=1,leaf2=0,leaf3=1"]));
    let ordered = json(&run(&["cdf", reference.to_str().unwrap(), "--at", "0,1,0,1"]));
    assert_eq!(by_id["results"]["value"], ordered["results"]["value"]);
    let v = f(&ordered["results"]["value"]);
    assert!(v > 0.0 && v < 1.0);
    assert_eq!(run(&["cdf", reference.to_str().unwrap(), "--at", "0,1"]).status.code(), Some(1));
    assert_eq!(run(&["cdf", reference.to_str().unwrap(), "--at", "leaf0=0"]).status.code(), Some(1));
}

#[test]
fn sample_writes_reproducible_csv() {
    let dir = TempDir::new().unwrap();
    let nest = example(dir.path(), "single-nest");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let empty = dir.path().join("e.csv");
    for p in [&a, &b] {
        let out = run(&["sample", nest.to_str().unwrap(), "--draws", "500", "--seed", "9", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
        assert_eq!(json(&out)["seed"], 9);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 501);
    assert!(run(&["sample", nest.to_str().unwrap(), "--draws", "0", "--seed", "9", "--out", empty.to_str().unwrap()]).status.success());
    assert_eq!(fs::read_to_string(&empty).unwrap().lines().count(), 1);
    let bad = dir.path().join("no/such/dir.csv");
    assert_eq!(run(&["sample", nest.to_str().unwrap(), "--draws", "1", "--seed", "1", "--out", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn stable_subcommands() {
    let r = json(&run(&["stable", "density", "--lambda", "0.5", "--x", "1"]));
    assert!((f(&r["results"]["series"]) - 0.2196956).abs() < 1e-7);
    assert!((f(&r["results"]["series"]) - f(&r["results"]["closed_form"])).abs() < 1e-12);
    let r = json(&run(&["stable", "moment", "--lambda", "0.5", "--kappa", "0.25"]));
    assert!((f(&r["results"]["exact"]) - 1.446_409_084_632_077).abs() < 1e-14);
    let r = json(&run(&["stable", "laplace", "--lambda", "0.5", "--t", "1", "--draws", "100000", "--seed", "3"]));
    let mc = &r["results"]["mc"];
    assert!((f(&mc["value"]) - (-1f64).exp()).abs() < 4.0 * f(&mc["std_error"]));
    let out = run(&["stable", "moment", "--lambda", "0.5", "--kappa", "0.7"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(0, 0.5)"));
    assert_eq!(run(&["stable", "density", "--lambda", "1.2", "--x", "1"]).status.code(), Some(1));
    let r = json(&run(&["stable", "sample", "--lambda", "0.6", "--draws", "20000", "--seed", "2"]));
    let eta = &r["results"]["eta"];
    assert!((f(&eta["mean"]) - f(&eta["mean_expected"])).abs() < 0.05);
}

#[test]
fn verify_exit_codes() {
    let dir = TempDir::new().unwrap();
    let sl = example(dir.path(), "single-layer");
    let out = run(&["verify", sl.to_str().unwrap(), "--draws", "50000", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let good = write(dir.path(), "good.json", r#"{"probabilities": {"1": 0.29289321881345254, "3": 0.41421356237309509}}"#);
    let out = run(&["verify", sl.to_str().unwrap(), "--draws", "50000", "--expected", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let tampered = write(dir.path(), "bad.json", r#"{"probabilities": {"1": 0.3}}"#);
    let out = run(&["verify", sl.to_str().unwrap(), "--draws", "50000", "--expected", tampered.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected-values"));

    let logit = example(dir.path(), "logit");
    assert_eq!(run(&["verify", logit.to_str().unwrap(), "--draws", "50000"]).status.code(), Some(0));
}

#[test]
fn frechet_corr_command() {
    let r = json(&run(&["frechet-corr", "--alpha", "3", "--lambda", "0.5"]));
    assert!((f(&r["results"]["closed_form"]) - 0.812_865_222_361_909_5).abs() < 1e-10);
    let r = json(&run(&["frechet-corr", "--alpha", "5", "--lambda", "1"]));
    assert_eq!(f(&r["results"]["closed_form"]), 0.0);
    assert_eq!(run(&["frechet-corr", "--alpha", "2", "--lambda", "0.5"]).status.code(), Some(1));
}

#[test]
fn pretty_table_and_usage_errors() {
    let out = run(&["--pretty", "stable", "moment", "--lambda", "0.5", "--kappa", "0.25"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("results.exact") && l.ends_with("1.4464090846320770")), "{text}");
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
