//! End-to-end runs of the `rmtld` binary: outputs, exit codes and reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"))
}

fn rmtld(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmtld")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_stdout(o: &Output) -> Value {
    assert_eq!(code(o), 0, "{}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn csv_rows(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| header.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

#[test]
fn samplesize_for_the_exponential_design() {
    let cfg = scenario("exponential");
    let v = json_stdout(&rmtld(&["samplesize", "--config", cfg.to_str().unwrap(), "--json"]));
    let r = &v["results"][0];
    assert_eq!(r["method"], "rmtld_weibull");
    assert_eq!(r["result"]["n_total"], 492);
    assert!(r["analytic_power"].as_f64().unwrap() >= 0.8);
}

#[test]
fn every_method_reports_a_row() {
    let cfg = scenario("ph_like");
    let v = json_stdout(&rmtld(&["samplesize", "--config", cfg.to_str().unwrap(), "--method", "all", "--json"]));
    let rows = v["results"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r["error"].is_null()));
}

#[test]
fn missing_design_field_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let mut v: Value = serde_json::from_str(&fs::read_to_string(scenario("exponential")).unwrap()).unwrap();
    v["design"].as_object_mut().unwrap().remove("tau");
    let cfg = write(dir.path(), "c.json", &v.to_string());
    let o = rmtld(&["samplesize", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("tau"), "{}", stderr(&o));
}

#[test]
fn equal_arms_cannot_be_sized() {
    let dir = TempDir::new().unwrap();
    let mut v: Value = serde_json::from_str(&fs::read_to_string(scenario("exponential")).unwrap()).unwrap();
    v["model_e"] = v["model_c"].clone();
    let cfg = write(dir.path(), "c.json", &v.to_string());
    assert_eq!(code(&rmtld(&["samplesize", "--config", &cfg])), 3);
}

const TOY: &str = "time,status,group\n1,1,a\n2,2,a\n3,1,a\n4,0,a\n1,1,b\n2,2,b\n3,1,b\n4,0,b\n";

#[test]
fn analyze_identical_groups() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "d.csv", TOY);
    let out = dir.path().join("out");
    let o = rmtld(&["analyze", &data, "--json", "--out", out.to_str().unwrap()]);
    let v = json_stdout(&o);
    assert_eq!(v["tau"], 4.0);
    assert!(v["rmtld"]["effect"].as_f64().unwrap().abs() < 1e-12);
    assert!((v["rmtld"]["p_value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let cif = csv_rows(&out.join("cif.csv"));
    let at = |cause: &str, t: &str| {
        cif.iter()
            .find(|r| r["group"] == "a" && r["cause"] == cause && r["time"] == t)
            .map(|r| r["cif"].parse::<f64>().unwrap())
    };
    assert_eq!(at("1", "1"), Some(0.25));
    assert_eq!(at("1", "3"), Some(0.5));
    assert_eq!(at("2", "2"), Some(0.25));
}

#[test]
fn analyze_rejects_bad_inputs() {
    let dir = TempDir::new().unwrap();
    let one = write(dir.path(), "one.csv", "time,status,group\n1,1,a\n2,0,a\n");
    assert_eq!(code(&rmtld(&["analyze", &one])), 2);

    let bad = write(dir.path(), "bad.csv", "time,status,group\n1,1,a\n2,7,b\n");
    let o = rmtld(&["analyze", &bad]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let data = write(dir.path(), "d.csv", TOY);
    let o = rmtld(&["analyze", &data, "--tau", "5"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains('4'), "{}", stderr(&o));
}

#[test]
fn calibrate_reports_an_unreachable_target() {
    let cfg = scenario("exponential");
    let args = ["calibrate", "--config", cfg.to_str().unwrap(), "--accrual", "10", "--followup", "2"];
    let o = rmtld(&[&args[..], &["--censoring-target", "0.05"]].concat());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("floor 0.2562"), "{}", stderr(&o));

    let v = json_stdout(&rmtld(&[&args[..], &["--censoring-target", "0.4", "--json"]].concat()));
    assert!((v["achieved"].as_f64().unwrap() - 0.4).abs() < 1e-6);
    assert_eq!(v["loss"]["kind"], "uniform");
}

#[test]
fn null_scenario_keeps_the_nominal_size() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario("null");
    let o = rmtld(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--arm-sizes",
        "200,200",
        "--iterations",
        "2000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("power_fixed.csv"));
    assert_eq!(rows.len(), 1);
    for test in ["hr", "shr", "rmtld"] {
        let p: f64 = rows[0][&format!("power_{test}")].parse().unwrap();
        assert!((p - 0.05).abs() <= 0.015, "{test}: {p}");
    }
}

#[test]
fn crossing_tau_sweep_has_an_interior_minimum() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario("crossing");
    let o = rmtld(&[
        "sweep",
        "tau",
        "--config",
        cfg.to_str().unwrap(),
        "--tau",
        "3,6,9,12,15",
        "--censoring-target",
        "0.05",
        "--method",
        "rmtld_weibull",
        "--iterations",
        "100",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let n: Vec<usize> = csv_rows(&dir.path().join("tau_sweep.csv"))
        .iter()
        .filter(|r| r["method"] == "rmtld_weibull")
        .map(|r| r["n_total"].parse().unwrap())
        .collect();
    assert_eq!(n.len(), 5);
    let (imin, _) = n.iter().enumerate().min_by_key(|(_, x)| **x).unwrap();
    assert!(imin > 0 && imin < 4, "{n:?}");
}

#[test]
fn manifest_rerun_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let (first, second) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = scenario("crossing");
    let o = rmtld(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--method",
        "rmtld_weibull",
        "--censoring-target",
        "none,0.3",
        "--iterations",
        "100",
        "--workers",
        "1",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = first.join("manifest.json");
    let o = rmtld(&[
        "simulate",
        "--config",
        manifest.to_str().unwrap(),
        "--workers",
        "4",
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    let files = m["outputs"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let name = f["file"].as_str().unwrap();
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}
