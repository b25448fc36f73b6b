use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn folia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_folia")).args(args).output().expect("folia runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn cubic_pair_is_refuted() {
    let path = example("cubic_level_sets.json");
    let out = folia(&["check-bisubmersion", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["exit_code"], 1);
    let verdicts: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["verdict"].as_str().unwrap()).collect();
    assert!(verdicts.contains(&"NotInvolutive"));
    assert!(verdicts.contains(&"NonSmoothCandidate"));
}

#[test]
fn linear_pair_passes() {
    let path = example("linear_level_sets.json");
    let out = folia(&["check-bisubmersion", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn su2_weinstein_dimensions() {
    let path = example("su2_star.json");
    let out = folia(&["weinstein", path.to_str().unwrap(), "--point", "1,0,0", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let c = check(&r, "construction");
    assert_eq!(c["details"]["n"], 2);
    assert_eq!(c["details"]["k"], 1);
    assert_eq!(c["details"]["abelian"], true);
    assert_eq!(check(&r, "phi_z")["verdict"], "Exists");
    assert_eq!(r["settings"]["samples"], 10);
}

#[test]
fn su2_kernel_rank_at_nonzero_point() {
    let path = example("su2_star.json");
    let out = folia(&["algebroid-report", path.to_str().unwrap(), "--point", "1,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"seq_dim\": 1"));
}

#[test]
fn config_errors_exit_three() {
    let dir = std::env::temp_dir().join(format!("folia-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"bogus": 1}"#).unwrap();
    let out = folia(&["weinstein", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    let missing = folia(&["weinstein", dir.join("absent.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(3));
    let usage = folia(&["no-such-command"]);
    assert_eq!(usage.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn reports_are_deterministic() {
    let path = example("flows_quadratic.json");
    let a = folia(&["flows-verify", path.to_str().unwrap(), "--seed", "7"]);
    let b = folia(&["flows-verify", path.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_flag_writes_report_and_curves() {
    let dir = std::env::temp_dir().join(format!("folia-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (json, dat, csv) = (dir.join("r.json"), dir.join("p.dat"), dir.join("p.csv"));
    let path = example("translation.json");
    let out = folia(&[
        "path-holonomy",
        path.to_str().unwrap(),
        "--output",
        json.to_str().unwrap(),
        "--plot-data",
        dat.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(r["command"], "path-holonomy");
    assert!(std::fs::read_to_string(&dat).unwrap().starts_with('#'));
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() > 1);
    std::fs::remove_dir_all(&dir).unwrap();
}
