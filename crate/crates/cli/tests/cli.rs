use std::process::Command;

use ruijsenaars_cli::{run_suite, validate_report, Suite, SuiteConfig};
use ruijsenaars_core::FlavorKind;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ruijsenaars"))
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = bin()
        .args(args)
        .arg("--json")
        .arg(&path)
        .arg("--quiet")
        .output()
        .unwrap();
    let code = out.status.code().unwrap();
    let text = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("no report: {}", String::from_utf8_lossy(&out.stderr)));
    (code, serde_json::from_str(&text).unwrap())
}

fn residuals(v: &Value) -> Vec<(String, String)> {
    v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["id"].as_str().unwrap().to_string(), c["residual"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn hirota_rational_passes_below_tolerance() {
    let (code, v) = run_json(&["hirota", "--flavor", "rational", "--seed", "1"]);
    assert_eq!(code, 0);
    assert_eq!(validate_report(&v), Ok(()));
    assert_eq!(v["status"], "pass");
    for c in v["checks"].as_array().unwrap() {
        assert!(c["residual"].as_str().unwrap().parse::<f64>().unwrap() < 1e-40);
        assert_eq!(c["samples"], 200);
        assert_eq!(c["anchor"], "hirota-three-term");
    }
}

#[test]
fn elliptic_wronski_through_fourth_order() {
    let (code, v) = run_json(&["wronski", "--flavor", "elliptic", "--n", "3", "--lmax", "4", "--samples", "4"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["checks"].as_array().unwrap().len(), 12);
}

#[test]
fn macdonald_suite_is_exact() {
    let (code, v) = run_json(&["macdonald", "--n", "2", "--q", "3/5", "--t", "2/7"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["config"]["q"], "3/5");
    let exact: Vec<_> = v["checks"].as_array().unwrap().iter().filter(|c| c["kind"] == "exact").collect();
    assert!(!exact.is_empty());
    assert!(exact.iter().all(|c| c["residual"] == "exact" && c["tolerance"] == "exact"));
}

#[test]
fn same_seed_same_report() {
    let args = ["keyidentity", "--flavor", "trig", "--n", "2", "--samples", "5", "--seed", "7"];
    let (_, a) = run_json(&args);
    let (_, b) = run_json(&args);
    assert_eq!(residuals(&a), residuals(&b));
    let (_, c) = run_json(&["keyidentity", "--flavor", "trig", "--n", "2", "--samples", "5", "--seed", "8"]);
    assert_ne!(residuals(&a), residuals(&c));
}

#[test]
fn perturbation_makes_wronski_fail() {
    let (code, v) = run_json(&[
        "wronski",
        "--flavor",
        "trig",
        "--n",
        "2",
        "--lmax",
        "2",
        "--samples",
        "3",
        "--perturb-kappa",
        "1e-3",
    ]);
    assert_eq!(code, 1);
    assert_eq!(v["status"], "fail");
    assert_eq!(validate_report(&v), Ok(()));
}

#[test]
fn invalid_configuration_is_a_usage_error() {
    for args in [
        vec!["hirota", "--n", "0"],
        vec!["bogus"],
        vec!["hirota", "--flavor", "hyperbolic"],
        vec!["macdonald", "--q", "1"],
        vec!["macdonald", "--n", "5"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn table_goes_to_stdout() {
    let out = bin().args(["kajihara", "--samples", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("kajihara/hd/m=3,n=2"));
    assert!(text.contains("status pass"));
}

#[test]
fn library_entry_point_matches_binary_config() {
    let cfg = SuiteConfig {
        flavors: vec![FlavorKind::Rational],
        samples: Some(3),
        ..SuiteConfig::default()
    };
    let report = run_suite(Suite::Hirota, &cfg).unwrap();
    assert!(report.passed());
    assert_eq!(report.checks.len(), 2);
    assert_eq!(validate_report(&report.to_json()), Ok(()));
}
