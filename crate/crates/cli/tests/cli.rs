use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn refrabill(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refrabill"))
        .args(args)
        .arg("--output")
        .arg(dir)
        .env("REFRABILL_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn ccs_on_default_ellipse() {
    let dir = tempfile::tempdir().unwrap();
    let out = refrabill(dir.path(), &["ccs"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("ccs.json"));
    assert_eq!(v["config"]["command"], "ccs");
    assert_eq!(v["result"]["configurations"].as_array().unwrap().len(), 4);
}

#[test]
fn circle_is_inadmissible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("circle.toml");
    std::fs::write(&cfg, "[curve]\nfamily = \"ellipse\"\na = 1.0\nb = 1.0\n").unwrap();
    let out = refrabill(dir.path(), &["--config", cfg.to_str().unwrap(), "ccs"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn realize_writes_report_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = refrabill(dir.path(), &["realize", "--word", "1,2,2,1", "--periodic", "--h", "72", "--samples-per-arc", "8"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("realization.json"));
    assert_eq!(v["files"][0], "trajectory.csv");
    let collisions: Vec<bool> = v["result"]["concatenation"]["collisions"].as_array().unwrap().iter().map(|b| b.as_bool().unwrap()).collect();
    assert_eq!(collisions, vec![false, true, false, true]);
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("s,x,y,vx,vy,regime,crossing"));
    assert_eq!(csv.lines().count(), 1 + 8 * 8);
}

#[test]
fn inadmissible_word_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = refrabill(dir.path(), &["realize", "--word", "1,3", "--periodic"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn simulate_reports_early_stop() {
    let dir = tempfile::tempdir().unwrap();
    let ok = refrabill(dir.path(), &["simulate", "--xi", "0", "--alpha", "0", "--steps", "3"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("simulate.json").exists());
    let bad = refrabill(dir.path(), &["simulate", "--xi", "1.0", "--alpha", "0.3", "--steps", "3"]);
    assert_eq!(code(&bad), 4);
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[params]\nhh = 3.0\n").unwrap();
    let out = refrabill(dir.path(), &["--config", cfg.to_str().unwrap(), "ccs"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("hh"));
}

#[test]
fn usage_error_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&refrabill(dir.path(), &["ccs", "--bogus"])), 1);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["saddle", "--h", "40"];
    assert_eq!(code(&refrabill(a.path(), &args)), 0);
    assert_eq!(code(&refrabill(b.path(), &args)), 0);
    let strip = |p: &Path| {
        let mut v = json(&p.join("saddle.json"));
        // the output directory is the only run-dependent field
        v["config"]["output"] = Value::Null;
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(strip(a.path()), strip(b.path()));
    let ta = std::fs::read(a.path().join("saddle.json")).unwrap();
    assert!(String::from_utf8(ta).unwrap().contains("e0"));
}

#[test]
fn scan_and_heteroclinic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = refrabill(dir.path(), &["scan", "--h-grid", "10,100", "--max-length", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("h,criterion,pass"));
    assert_eq!(csv.lines().count(), 1 + 2 * 3);

    let out = refrabill(dir.path(), &["heteroclinic", "--h", "40", "--pad", "4", "--bridge", "", "--bridge", "4,1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("heteroclinic.json"));
    assert_eq!(v["result"]["realizations"].as_array().unwrap().len(), 2);
}
