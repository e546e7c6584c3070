use std::process::Command;

use bb84_attacks::sim::run_session;
use bb84_attacks::sim::Check;
use bb84_attacks::SessionConfig;
use bb84_attacks_cli::commands::SimulateReport;
use bb84_attacks_cli::{run, EXIT_FAILED, EXIT_OK, EXIT_USAGE};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("bb84-attacks").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn thresholds_reports_pns_row() {
    let (code, out, err) = invoke(&["thresholds", "--mu", "1", "--eta", "0.9", "--format", "csv"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("strategy,max_d_ab,crossing_d_ab,break_possible,mu,eta,eta_star\n"));
    let pns = csv_rows(&out).into_iter().find(|r| r[0] == "pns").unwrap();
    assert!((pns[1].parse::<f64>().unwrap() - 0.081_237).abs() < 1e-6);
    assert_eq!(pns[3], "false");
    assert!(err.contains("\"manifest\""));
}

#[test]
fn thresholds_break_below_eta_star() {
    let (code, out, _) = invoke(&[
        "thresholds",
        "--mu",
        "1",
        "--eta",
        "0.3",
        "--format",
        "json",
    ]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["schema_version"], 1);
    let pns = doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["strategy"] == "pns")
        .unwrap();
    assert_eq!(pns["max_d_ab"], 0.0);
    assert_eq!(pns["break_possible"], true);
}

#[test]
fn invalid_arguments_exit_two() {
    for args in [
        &["thresholds", "--mu", "0.0"][..],
        &["thresholds", "--eta", "1.5"],
        &["thresholds", "--mu", "25"],
        &["sweep", "--strategy", "ir", "--d-max", "0.3"],
        &["sweep", "--strategy", "opt", "--steps", "0"],
        &["sweep"],
        &["sweep", "--strategy", "nope"],
        &["simulate", "--pulses", "0"],
        &["simulate", "--attack", "bs-ir", "--d", "0.3"],
        &["simulate", "--shards", "0"],
        &["frobnicate"],
        &["--config", "/nonexistent/config.json", "verify"],
    ] {
        let (code, _, err) = invoke(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn help_and_version_succeed() {
    let (code, out, _) = invoke(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("simulate"));
    let (code, out, _) = invoke(&["--version"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn sweep_ir_crosses_near_threshold() {
    let (code, out, _) = invoke(&[
        "sweep",
        "--strategy",
        "ir",
        "--d-max",
        "0.25",
        "--steps",
        "1000",
        "--format",
        "csv",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("d_ab,i_ab_bits,i_ae_bits,feasible\n"));
    assert!(!out.contains('\r'));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1001);
    let flip = rows
        .windows(2)
        .find(|w| w[0][3] == "true" && w[1][3] == "false")
        .unwrap();
    let lo: f64 = flip[0][0].parse().unwrap();
    let hi: f64 = flip[1][0].parse().unwrap();
    assert!(lo <= 0.207_106_78 && 0.207_106_78 <= hi);
}

#[test]
fn sweep_opt_starts_at_full_information() {
    let (_, out, _) = invoke(&[
        "sweep",
        "--strategy",
        "opt",
        "--steps",
        "10",
        "--format",
        "csv",
    ]);
    assert_eq!(csv_rows(&out)[0], ["0", "1", "0", "true"]);
}

#[test]
fn sweep_pns_crossing_within_a_thousandth() {
    let (_, out, _) = invoke(&[
        "sweep",
        "--strategy",
        "pns",
        "--mu",
        "1",
        "--eta",
        "0.9",
        "--steps",
        "10000",
        "--format",
        "csv",
    ]);
    let rows = csv_rows(&out);
    let cross = rows.iter().find(|r| r[3] == "false").unwrap();
    let d: f64 = cross[0].parse().unwrap();
    assert!((d - 0.081_237).abs() < 1e-3);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let path = std::env::temp_dir().join(format!("bb84-cli-test-{}.json", std::process::id()));
    std::fs::write(&path, r#"{"mu": 2.0, "eta": 0.5, "format": "json"}"#).unwrap();
    let p = path.to_str().unwrap();
    let (code, out, _) = invoke(&["--config", p, "thresholds", "--eta", "0.9"]);
    std::fs::write(&path, r#"{"mu": 2.0, "unknown_key": 1}"#).unwrap();
    let (bad, _, _) = invoke(&["--config", p, "thresholds"]);
    let _ = std::fs::remove_file(&path);

    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["mu"], 2.0);
    assert_eq!(doc["eta"], 0.9);
    assert_eq!(bad, EXIT_USAGE);
}

#[test]
fn simulate_baseline_has_zero_qber() {
    let (code, out, err) = invoke(&[
        "simulate", "--attack", "none", "--mu", "0.1", "--eta", "1", "--pulses", "1000000",
        "--seed", "42", "--format", "json",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["stats"]["qber"]["successes"], 0);
    assert_eq!(doc["stats"]["qber"]["value"], 0.0);
}

#[test]
fn simulate_check_passes_for_bs_opt() {
    let (code, out, _) = invoke(&[
        "simulate", "--attack", "bs-opt", "--t", "0.9", "--d", "0.1", "--mu", "1", "--pulses",
        "1000000", "--seed", "7", "--check", "--format", "json",
    ]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["check_passed"], true);
    for c in doc["checks"].as_array().unwrap() {
        assert!(c["sigma_distance"].as_f64().unwrap() < 3.0, "{c}");
    }
}

#[test]
fn check_beyond_three_sigma_fails() {
    let stats = run_session(&SessionConfig::new(1.0, 0.9, None, 1000, 1)).unwrap();
    let report = SimulateReport {
        stats,
        checks: Some(vec![Check {
            quantity: "qber",
            observed: 0.1,
            expected: 0.0,
            sigma_distance: 3.5,
        }]),
    };
    assert!(!report.check_passed());
}

#[test]
fn simulate_csv_has_rate_rows() {
    let (code, out, _) = invoke(&[
        "simulate", "--pulses", "10000", "--format", "csv", "--check",
    ]);
    assert_eq!(code, EXIT_OK);
    let rows = csv_rows(&out);
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(
        names,
        ["qber", "eve_accuracy", "nonempty_rate", "coincidence_rate"]
    );
    assert!(rows.iter().all(|r| r.len() == 7));
}

#[test]
fn verify_passes() {
    let (code, out, _) = invoke(&["verify"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.trim_end().ends_with("PASS"));
    assert_ne!(code, EXIT_FAILED);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_bb84-attacks");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["verify"]), Some(0));
    assert_eq!(status(&["thresholds", "--mu", "0.0"]), Some(2));
    assert_eq!(status(&["thresholds", "--bogus"]), Some(2));
}
