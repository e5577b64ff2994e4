//! Functional tests for the command-line interface, driven through the
//! compiled binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cubature-adversary"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn temp_path(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("cubature-cli-{}-{name}", std::process::id()));
    path
}

#[test]
fn bound_thm2_example_reproduces() {
    let out = run(&[
        "bound", "--formula", "thm2", "--d", "10", "--delta", "0.0403278", "--eps", "0.5",
    ]);
    let json = stdout_json(&out);
    assert_eq!(json["schema"], 1);
    assert_eq!(json["subcommand"], "bound");
    assert_eq!(json["config"]["formula"], "thm2");
    assert_eq!(json["config"]["eps"], 0.5);
    let value = json["result"]["value"].as_f64().unwrap();
    assert!((value / 512.0 - 1.0).abs() < 5e-4, "value = {value}");
}

#[test]
fn bound_log_space_nulls_the_plain_value() {
    let out = run(&[
        "bound", "--formula", "thm2", "--d", "10", "--delta", "0.0403278", "--log-space",
    ]);
    let json = stdout_json(&out);
    assert!(json["result"]["value"].is_null());
    assert!(json["result"]["log_value"].is_f64());
}

#[test]
fn bound_overflowing_value_is_null() {
    let out = run(&[
        "bound", "--formula", "thm2", "--d", "1000", "--delta", "0.02", "--eps", "0.1",
    ]);
    let json = stdout_json(&out);
    assert!(json["result"]["value"].is_null());
    let log = json["result"]["log_value"].as_f64().unwrap();
    assert!((log - 1394.3668230397059).abs() < 1e-9);
}

#[test]
fn bound_csv_has_header_and_one_row() {
    let out = run(&["bound", "--formula", "sukharev", "--d", "2", "--n", "16", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("formula,"));
    assert!(lines[1].contains("0.08333333333333333"));
}

#[test]
fn attack_embeds_config_and_certifies() {
    let out = run(&[
        "attack", "--rule", "midpoint:4", "--d", "2", "--r", "1", "--delta", "0.01",
        "--seed", "7", "--samples-measure", "20000", "--samples-integral", "20000",
        "--inner-samples", "200",
    ]);
    let json = stdout_json(&out);
    assert_eq!(json["config"]["n"], 16);
    assert_eq!(json["config"]["samples_measure"], 20000);
    let analytic = json["result"]["certificate_analytic"].as_f64().unwrap();
    assert!((analytic - 0.75409).abs() < 1e-4);
    assert_eq!(json["result"]["node_audit"].as_f64().unwrap(), 0.0);
    let mc = json["result"]["certificate_mc"].as_f64().unwrap();
    assert!(mc >= analytic - json["result"]["certificate_mc_radius"].as_f64().unwrap());
}

#[test]
fn attack_accepts_a_points_file() {
    let path = temp_path("attack.csv");
    let gen = run(&["gen", "--rule", "random:6", "--d", "2", "--seed", "5", "--out",
        path.to_str().unwrap()]);
    assert!(gen.status.success());
    let out = run(&[
        "attack", "--points", path.to_str().unwrap(), "--delta", "0.02",
        "--samples-measure", "5000", "--samples-integral", "5000", "--inner-samples", "100",
    ]);
    let json = stdout_json(&out);
    assert_eq!(json["config"]["d"], 2);
    assert_eq!(json["config"]["n"], 6);
    assert_eq!(json["result"]["node_audit"].as_f64().unwrap(), 0.0);
    std::fs::remove_file(&path).ok();
}

#[test]
fn verify_emits_outcomes_and_exit_zero() {
    let out = run(&[
        "verify", "--suite", "class", "--d", "2", "--r", "1", "--delta", "0.1",
        "--seed", "3", "--budget", "40",
    ]);
    let json = stdout_json(&out);
    let outcomes = json["result"].as_array().unwrap();
    assert_eq!(outcomes.len(), 3);
    for o in outcomes {
        assert_eq!(o["passed"], true);
    }
}

#[test]
fn verify_csv_lists_every_outcome() {
    let out = run(&[
        "verify", "--suite", "class", "--d", "2", "--r", "1", "--delta", "0.1",
        "--seed", "3", "--budget", "40", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("property_id,"));
    assert!(lines[1].starts_with("class_norm,"));
}

#[test]
fn gen_round_trips_through_attack_input() {
    let path = temp_path("gen.csv");
    let out = run(&["gen", "--rule", "midpoint:3", "--d", "2", "--out", path.to_str().unwrap()]);
    let json = stdout_json(&out);
    assert_eq!(json["result"]["n"], 9);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("d=2\n"));
    assert_eq!(text.lines().count(), 10);
    std::fs::remove_file(&path).ok();
}

#[test]
fn volume_reports_log_and_plain_values() {
    let out = run(&["volume", "--d", "10", "--delta", "0.1"]);
    let json = stdout_json(&out);
    let vol = json["result"]["ball_volume"].as_f64().unwrap();
    let bound = json["result"]["volume_bound"].as_f64().unwrap();
    assert!(vol < bound);
    let ratio = json["result"]["slice_ratio"].as_f64().unwrap();
    assert!(ratio > 0.0 && ratio <= 1.0);
}

#[test]
fn input_errors_exit_one_and_name_the_flag() {
    let cases: [&[&str]; 5] = [
        &["bound", "--formula", "thm9", "--d", "2"],
        &["bound", "--formula", "certificate", "--d", "2"],
        &["attack", "--rule", "midpoint:2"],
        &["verify", "--suite", "bogus"],
        &["bound", "--formula", "thm2", "--d", "2", "--eps", "1.5"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "args: {args:?}");
        assert!(!out.stderr.is_empty(), "args: {args:?}");
    }
    let out = bin().arg("--bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let out = bin().arg(flag).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "flag: {flag}");
    }
}

#[test]
fn thread_cap_env_is_validated() {
    let out = bin()
        .args(["volume", "--d", "2"])
        .env("CUBATURE_ADVERSARY_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("CUBATURE_ADVERSARY_THREADS"));
}
