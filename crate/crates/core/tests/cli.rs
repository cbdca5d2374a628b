use std::process::Command;

use serde_json::{json, Value};

const SW_PASS: &str = r#"{"n":3,"p":2,"p_tilde":2,"q":6,"q_tilde":2,"alpha":0,"beta":0,"gamma":2}"#;
const SW_FAIL: &str = r#"{"n":3,"p":2,"p_tilde":2,"q":6,"q_tilde":2,"alpha":0,"beta":0,"gamma":1}"#;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_angular-lab")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn check_exit_codes_follow_verdict() {
    let (code, out, _) = run(&["check", "--theorem", "mixed-sw", "--tuple", SW_PASS]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["tool"], "angular-lab");
    assert_eq!(v["result"]["overall"], "pass");
    assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
    let (code, _, _) = run(&["check", "--theorem", "mixed-sw", "--tuple", SW_FAIL]);
    assert_eq!(code, 1);
    let weighted = r#"{"n":3,"p":2,"q":4,"p_tilde":2,"q_tilde":2,"alpha":-0.4,"beta":0,"gamma":2.65}"#;
    assert_eq!(run(&["check", "--theorem", "mixed-sw", "--tuple", weighted]).0, 0);
    assert_eq!(run(&["check", "--theorem", "sw-classical", "--tuple", weighted]).0, 1);
}

#[test]
fn decay_reports_fit_and_verdict() {
    let grid = r#""grid":{"rho_min":1e-4,"rho_max":8,"nodes":32,"sphere_level":2},"target":{"rho_min":1e-4,"rho_max":400,"nodes":64,"sphere_level":2}"#;
    let sharp = r#"{"n":3,"p":1,"p_tilde":"inf","q":"inf","q_tilde":"inf","alpha":0,"beta":0}"#;
    let times = "[10,31.6,100,316,1000]";
    let params = format!(r#"{{"experiment":{{"times":{times},"saturating":true}},{grid}}}"#);
    let (code, out, err) = run(&["decay", "--kind", "heat", "--tuple", sharp, "--params", &params]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["result"]["fit"]["slope"].as_f64().unwrap() + 1.5).abs() < 0.05);
    // the same data cannot saturate the slower rate claimed for p = 1.2
    let slow = r#"{"n":3,"p":1.2,"p_tilde":"inf","q":"inf","q_tilde":"inf","alpha":0,"beta":0}"#;
    let (code, out, _) = run(&["decay", "--kind", "heat", "--tuple", slow, "--params", &params]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["verdict"], "fail");
    assert!(v["result"]["fit"]["slope"].is_number());
}

#[test]
fn configuration_errors_exit_2() {
    let bad_tuple = r#"{"n":3,"p":0.5}"#;
    assert_eq!(run(&["check", "--theorem", "mixed-sw", "--tuple", bad_tuple]).0, 2);
    assert_eq!(run(&["check", "--theorem", "no-such", "--tuple", SW_PASS]).0, 2);
    assert_eq!(run(&["check", "--theorem", "mixed-sw", "--tuple", r#"{"n":3,"bogus":1}"#]).0, 2);
    assert_eq!(run(&["norm", "--params", r#"{"alpha":0,"p":2,"p_tilde":2}"#]).0, 2);
    let (code, _, err) = run(&["no-such-command"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

#[test]
fn config_file_reproduces_command_line_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("report.csv");
    let tuple: Value = serde_json::from_str(SW_PASS).unwrap();
    let config = json!({
        "command": "scan",
        "tuple": tuple,
        "params": {"checker": "mixed-sw", "axes": [
            {"field": "alpha", "start": -1.0, "end": 1.0, "steps": 4},
            {"field": "q", "start": 2.0, "end": 8.0, "steps": 3}
        ]},
        "format": "csv",
        "seed": 3
    });
    std::fs::write(&cfg, serde_json::to_string(&config).unwrap()).unwrap();
    let cfg_arg = cfg.to_str().unwrap();
    let (code, stdout, _) = run(&["scan", "--config", cfg_arg]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("# angular-lab "));
    assert_eq!(stdout.lines().filter(|l| !l.starts_with('#')).count(), 1 + 5 * 4);
    let (code, file_out, _) = run(&["scan", "--config", cfg_arg, "--output", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(file_out.is_empty());
    let written = std::fs::read_to_string(&out).unwrap();
    let body = |s: &str| s.lines().skip(1).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(body(&written), body(&stdout));
    let inline = run(&[
        "scan",
        "--tuple",
        SW_PASS,
        "--params",
        &serde_json::to_string(&config["params"]).unwrap(),
        "--format",
        "csv",
        "--seed",
        "3",
    ]);
    assert_eq!(inline.1, stdout);
    assert_eq!(run(&["check", "--config", cfg_arg]).0, 2);
}

#[test]
fn reports_are_deterministic() {
    let params = r#"{"nu":1.5,"radii":[0.25,0.5,2.0,5.0]}"#;
    let a = run(&["singint", "--params", params]);
    let b = run(&["singint", "--params", params]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let v: Value = serde_json::from_str(&a.1).unwrap();
    let first = v["result"][0]["value"].as_f64().unwrap();
    let exact = 2.0 * std::f64::consts::PI / (0.25 * 0.5) * (1.25f64.sqrt() - 0.75f64.sqrt());
    assert!((first - exact).abs() < 1e-9 * exact);
}

#[test]
fn picard_and_split_run_end_to_end() {
    let monitor = r#"{"n":3,"p":2,"p_tilde":4,"alpha":-0.5}"#;
    let params = r#"{"datum":{"box_len":16,"resolution":32,"amplitude":0.05,"radius":3,"wavenumber":1},"horizon":0.5,"steps":4,"max_iter":8}"#;
    let (code, out, err) = run(&["picard", "--tuple", monitor, "--params", params]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["stop"], "converged");
    let split = r#"{"datum":{"box_len":16,"resolution":16,"amplitude":6,"radius":4,"wavenumber":1},"p_tilde":3}"#;
    let (code, out, _) = run(&["split", "--params", split, "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l.starts_with("small part")));
}
