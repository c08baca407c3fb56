use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn macroreal(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_macroreal")).args(args).current_dir(dir).output().expect("spawn")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn witness_reports_the_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = macroreal(&["witness", "--alpha", "0.5", "--dim", "4", "--json", "-"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["contradiction"]["deficit"].as_f64(), Some(0.125));
    assert_eq!(v["certified"], Value::Bool(true));
    assert!(v["antidist"]["measurement"].is_object());
}

#[test]
fn sweep_csv_has_schema_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--alpha-min", "0.05", "--alpha-max", "0.70", "--steps", "64", "--csv", "out.csv"];
    assert_eq!(macroreal(&args, dir.path()).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("out.csv")).unwrap();
    assert_eq!(macroreal(&args, dir.path()).status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("out.csv")).unwrap());

    let mut r = csv::Reader::from_reader(first.as_slice());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header.join(","),
        "alpha,beta,tau,delta,eta,kappa,a,b,c,antidist_ok,esmr_lower,quantum_upper,deficit"
    );
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 64);
    for row in &rows {
        let alpha: f64 = row[0].parse().unwrap();
        let deficit: f64 = row[12].parse().unwrap();
        assert!((deficit - alpha * alpha * (1.0 - 2.0 * alpha * alpha)).abs() < 1e-14);
        assert_eq!(&row[9], "true");
    }
}

#[test]
fn exclusion_modes() {
    let dir = tempfile::tempdir().unwrap();
    let esmr = macroreal(&["exclude", "--alpha", "0.5", "--mode", "esmr"], dir.path());
    assert_eq!(esmr.status.code(), Some(0));
    let v = json(&esmr);
    assert_eq!(v["status"], "infeasible");
    assert_eq!(v["certificate"]["kind"], "farkas");

    let overlap = json(&macroreal(&["exclude", "--alpha", "0.5", "--mode", "max-overlap"], dir.path()));
    assert!((overlap["optimum"].as_f64().unwrap() - 0.375).abs() < 1e-7);

    let control = macroreal(&["exclude", "--alpha", "0.5", "--mode", "emmr", "--macro-only"], dir.path());
    assert_eq!(control.status.code(), Some(0));
    assert_eq!(json(&control)["status"], "feasible");
}

#[test]
fn zoo_export_classifies_identically() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["ks", "bb", "det"] {
        let out = macroreal(
            &["zoo", kind, "--nodes", "3000", "--out", "m.json", "--fragment-out", "f.json"],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let built = json(&out)["classification"].clone();
        let again = macroreal(&["classify", "--model", "m.json", "--fragment", "f.json"], dir.path());
        assert_eq!(again.status.code(), Some(0));
        assert_eq!(json(&again), built, "{kind}");
    }
}

#[test]
fn failed_born_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = macroreal(&["zoo", "ks", "--nodes", "200", "--check-born", "--tol", "1e-6"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["validation"]["pass"], Value::Bool(false));
}

#[test]
fn lgi_csv_declares_convention() {
    let dir = tempfile::tempdir().unwrap();
    let out = macroreal(&["lgi", "--theta-grid", "32", "--model", "emmr-toy"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# K = C12 + C23 - C13"));
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let ks: Vec<f64> = r.records().map(|row| row.unwrap()[4].parse().unwrap()).collect();
    assert_eq!(ks.len(), 32);
    assert!(ks.iter().all(|&k| k <= 1.0 + 1e-9));
}

#[test]
fn props_are_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--seed", "7", "props", "--count", "12", "--nodes", "2000"];
    let a = macroreal(&args, dir.path());
    let b = macroreal(&args, dir.path());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["random"]["violations"], 0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(macroreal(&["exclude", "--mode", "esmr"], dir.path()).status.code(), Some(2));
    assert_eq!(macroreal(&["witness", "--alpha", "0.9"], dir.path()).status.code(), Some(2));
    assert_eq!(macroreal(&["classify", "--model", "missing.json", "--fragment", "f.json"], dir.path()).status.code(), Some(2));
    assert_eq!(macroreal(&["--help"], dir.path()).status.code(), Some(0));
}
