mod common;

use std::process::Command;

use serde_json::Value;
use structid::cli::{run, EXIT_INPUT, EXIT_OK, EXIT_USAGE};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("structid").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(name: &str) -> String {
    common::model_path(name).display().to_string()
}

#[test]
fn predator_prey_json() {
    let (code, out, _) = invoke(&[&path("predator_prey"), "--prob", "0.99", "--json", "--seed", "4"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["globally_identifiable"], serde_json::json!(["theta1", "theta3", "theta4", "theta5"]));
    assert_eq!(v["not_locally_identifiable"], serde_json::json!(["theta2", "theta6"]));
    assert_eq!(v["method"], "sat");
    assert_eq!(v["seed"], "4");
    assert!(v["diagnostics"]["D1"].is_string());
    for key in ["s", "d0", "D1", "D2", "alpha", "beta", "E_size", "Et_size", "retries"] {
        assert!(!v["diagnostics"][key].is_null(), "{key}");
    }
}

#[test]
fn missing_file_is_an_input_error() {
    let (code, _, err) = invoke(&["missing.ode"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("missing.ode"));
}

#[test]
fn bad_probability_is_a_usage_error() {
    let (code, _, err) = invoke(&[&path("affine"), "--prob", "1.5"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(!err.is_empty());
}

#[test]
fn usage_errors() {
    for args in [
        vec!["--method", "magic"],
        vec!["--prime", "15"],
        vec!["--prime", "2147483648"],
        vec!["--threads", "0"],
        vec!["--retry-cap", "0"],
        vec!["--params", "nope"],
    ] {
        let mut full = vec![path("affine")];
        full.extend(args.iter().map(|s| s.to_string()));
        let refs: Vec<&str> = full.iter().map(String::as_str).collect();
        assert_eq!(invoke(&refs).0, EXIT_USAGE, "{args:?}");
    }
}

#[test]
fn syntax_error_is_an_input_error() {
    let dir = std::env::temp_dir().join(format!("structid-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("broken.ode");
    std::fs::write(&file, "params: a\nstates:\n  x' = a*(x\noutputs:\n  y = x\n").unwrap();
    let (code, _, err) = invoke(&[file.to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("broken.ode:"), "{err}");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn json_is_byte_identical_without_timings() {
    for name in ["affine", "daisy", "predator_prey"] {
        let args = [path(name), "--json".into(), "--seed".into(), "77".into(), "--no-timings".into()];
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let (c1, a, _) = invoke(&refs);
        let (c2, b, _) = invoke(&refs);
        assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
        assert_eq!(a, b, "{name}");
        assert!(!a.contains("timings"));
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let base = [path("predator_prey"), "--json".into(), "--seed".into(), "9".into(), "--no-timings".into()];
    let with = |t: &str| {
        let mut args: Vec<String> = base.to_vec();
        args.extend(["--threads".to_string(), t.to_string()]);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        invoke(&refs).1
    };
    assert_eq!(with("1"), with("4"));
}

#[test]
fn methods_agree_on_fixtures() {
    for name in ["affine", "daisy", "genssi", "squared_rate", "input_driven"] {
        let run_with = |method: &str| {
            let (code, out, _) = invoke(&[&path(name), "--json", "--seed", "3", "--method", method, "--no-timings"]);
            assert_eq!(code, EXIT_OK);
            let v: Value = serde_json::from_str(&out).unwrap();
            (v["globally_identifiable"].clone(), v["locally_only"].clone())
        };
        assert_eq!(run_with("sat"), run_with("membership"), "{name}");
    }
}

#[test]
fn text_report_and_params_filter() {
    let (code, out, _) = invoke(&[&path("daisy"), "--seed", "2", "--params", "theta1", "--no-timings"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("globally identifiable:     {}"), "{out}");
    assert!(out.contains("locally identifiable only: {theta1}"), "{out}");
    assert!(!out.contains("time:"));
}

#[test]
fn abort_on_nonlocal_is_an_input_error() {
    let (code, _, err) = invoke(&[&path("predator_prey"), "--seed", "1", "--abort-on-nonlocal"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("theta2"), "{err}");
}

#[test]
fn exact_field_matches_prime_field() {
    let (c1, a, _) = invoke(&[&path("affine"), "--json", "--seed", "5", "--no-timings"]);
    let (c2, b, _) = invoke(&[&path("affine"), "--json", "--seed", "5", "--no-timings", "--exact"]);
    assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
    let (a, b): (Value, Value) = (serde_json::from_str(&a).unwrap(), serde_json::from_str(&b).unwrap());
    assert_eq!(a["globally_identifiable"], b["globally_identifiable"]);
    assert_eq!(a["locally_only"], b["locally_only"]);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_structid");
    let ok = Command::new(bin).args([path("affine").as_str(), "--seed", "1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("{mu2}"));
    let missing = Command::new(bin).arg("missing.ode").output().unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_INPUT));
    let usage = Command::new(bin).args([path("affine").as_str(), "--prob", "1.5"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(EXIT_USAGE));
}
