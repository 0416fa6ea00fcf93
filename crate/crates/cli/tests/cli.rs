use std::process::{Command, Output};

use serde_json::Value;

fn qmeas(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qmeas"));
    c.args(args).env_remove("QMEAS_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    qmeas(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON report")
}

const SECTIONS: [&str; 4] = ["simulate", "discriminate", "nogo", "decohere"];

#[test]
fn every_command_emits_the_same_top_level_keys() {
    let mut key_sets = Vec::new();
    for cmd in ["simulate", "discriminate", "nogo", "decohere", "all"] {
        let out = run(&[cmd, "--events", "1000"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        let keys: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
        for s in SECTIONS {
            let present = !v[s].is_null();
            assert_eq!(present, cmd == "all" || cmd == s, "{cmd}: section {s}");
        }
        assert!(v["duration_ms"].is_null());
        key_sets.push(keys);
    }
    assert!(key_sets.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn eigenstate_input_is_certain() {
    let v = json(&run(&["simulate", "--a1", "1", "--a2", "0", "--events", "100"]));
    let f = &v["simulate"]["frequency"]["frequencies"];
    assert_eq!(f[0].as_f64(), Some(1.0));
    assert_eq!(f[1].as_f64(), Some(0.0));
}

#[test]
fn seed_flag_beats_environment() {
    let env_only = qmeas(&["simulate", "--events", "10"]).env("QMEAS_SEED", "77").output().unwrap();
    assert_eq!(json(&env_only)["config"]["rng_seed"], 77);
    let both = qmeas(&["simulate", "--events", "10", "--seed", "5"])
        .env("QMEAS_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(json(&both)["config"]["rng_seed"], 5);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    std::fs::write(&path, r#"{"a1_re": 0.6, "a2_re": 0.8, "n_env": 3, "n_events": 500}"#).unwrap();
    let out = run(&["decohere", "--config", path.to_str().unwrap(), "--n-env", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["config"]["n_env"], 2);
    assert_eq!(v["config"]["n_events"], 500);
    assert!((v["config"]["a1_re"].as_f64().unwrap() - 0.6).abs() < 1e-15);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"unknown_key": 1}"#).unwrap();
    for args in [
        vec!["simulate", "--config", bad.to_str().unwrap()],
        vec!["simulate", "--config", "/nonexistent/qmeas.json"],
        vec!["nogo", "--nogo-samples", "9999"],
        vec!["simulate", "--a1", "0.9", "--a2", "0.9"],
        vec!["decohere", "--n-env", "0"],
        vec!["decohere", "--env-overlap", "2"],
        vec!["simulate", "--a1", "x"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn slightly_unnormalized_amplitudes_are_repaired() {
    let out = run(&["simulate", "--events", "10", "--a1", "0.6000001", "--a2", "0.8"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("renormalized"));
    let v = json(&out);
    assert_eq!(v["warnings"].as_array().unwrap().len(), 1);
    let (a, b) = (v["config"]["a1_re"].as_f64().unwrap(), v["config"]["a2_re"].as_f64().unwrap());
    assert!((a * a + b * b - 1.0).abs() < 1e-15);
}

#[test]
fn complex_amplitudes_are_parsed() {
    let out = run(&["discriminate", "--a1", "0.6", "--a2", "0,0.8"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let gamma = v["discriminate"]["purity"]["pure_optimum"]["gamma"].as_f64().unwrap();
    assert!((gamma - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
}

#[test]
fn product_state_nogo_warns_and_flags_regime() {
    let out = run(&["nogo", "--a1", "1", "--a2", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let v = json(&out);
    assert_eq!(v["nogo"]["regime"], "product-state");
}

#[test]
fn symmetric_nogo_finds_nothing() {
    let v = json(&run(&["nogo"]));
    let verdicts = v["nogo"]["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 3);
    for verdict in verdicts {
        assert_eq!(verdict["found"], false);
        assert_eq!(verdict["n_candidates_tested"], 20000);
    }
}

#[test]
fn decoherence_factor_is_reported() {
    let v = json(&run(&["decohere", "--n-env", "5", "--env-overlap", "0.5"]));
    let f = v["decohere"]["report"]["coherence_factor"].as_f64().unwrap();
    assert!((f - 0.03125).abs() < 1e-10);
    let v = json(&run(&["decohere", "--env-overlap", "1"]));
    assert!((v["decohere"]["report"]["coherence_factor"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn floats_use_seventeen_significant_digits() {
    let out = run(&["decohere"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"env_overlap\": 5.0000000000000000e-1"));
}

#[test]
fn csv_rows_carry_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let out = run(&["decohere", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("metric,value,tolerance,pass"));
    let row = text
        .lines()
        .find(|l| l.starts_with("check.decohere.coherence_factor,"))
        .unwrap();
    assert!(row.ends_with(",1.0000000000000000e-10,pass"), "{row}");
    assert!(text.lines().any(|l| l == "simulate,,,"));
}

#[test]
fn timing_is_opt_in() {
    let v = json(&run(&["decohere", "--timing"]));
    assert!(v["duration_ms"].as_f64().unwrap() >= 0.0);
}
