//! End-to-end tests against the compiled binary: flag handling, exit codes,
//! output formats, and determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradnoise"))
        .args(args)
        .output()
        .expect("binary is runnable")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by exit, not signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).expect("stdout is JSON")
}

fn error_json(out: &Output) -> Value {
    serde_json::from_str(stderr(out).trim()).expect("stderr is an error JSON")
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("gradnoise-cli-{}-{name}", std::process::id()));
    p
}

#[test]
fn analyze_reproduces_example_values_in_json() {
    let out = run(&[
        "analyze", "--method", "gd", "--spectrum", "0.1,1", "--alpha", "1.5055", "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let v = json(&out);
    assert!((v["rho"].as_f64().unwrap() - 0.8494).abs() < 1e-3);
    assert!((v["j"].as_f64().unwrap() - 1.9294).abs() < 1e-3);
    assert!((v["mu"].as_f64().unwrap() - 0.1).abs() < 1e-15);
    assert!(v["h2_residual"].as_f64().unwrap() < 1e-9);
    assert!(v["lower_bound"].as_f64().unwrap() <= v["j"].as_f64().unwrap());
}

#[test]
fn analyze_outside_region_exits_three_and_reports_verdict() {
    let out = run(&[
        "analyze", "--method", "ag", "--mu", "0.1", "--L", "1", "--d", "2", "--alpha", "1.9",
        "--beta", "0.9", "--format", "json",
    ]);
    assert_eq!(code(&out), 3);
    let v = json(&out);
    assert_eq!(v["region"], "OUTSIDE");
    assert_eq!(v["inside"], Value::Bool(false));
    assert!(v["j"].is_null());
    assert!(v["margin"].as_f64().unwrap() <= 0.0);
}

#[test]
fn stability_exit_code_tracks_the_verdict() {
    let stable = run(&[
        "stability", "--method", "gd", "--mu", "0.1", "--L", "1", "--alpha", "1.0",
    ]);
    assert_eq!(code(&stable), 0);
    let unstable = run(&[
        "stability", "--method", "gd", "--mu", "0.1", "--L", "1", "--alpha", "2.5", "--format",
        "json",
    ]);
    assert_eq!(code(&unstable), 3);
    let v = json(&unstable);
    assert_eq!(v["region"], "OUTSIDE");
    assert!(v["rho"].as_f64().unwrap() >= 1.0);
}

#[test]
fn tradeoff_csv_is_schema_versioned_and_byte_deterministic() {
    let args = [
        "tradeoff", "--method", "gd", "--spectrum", "0.1,1", "--tau-grid", "0.1:10:11",
        "--format", "csv",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout, "same flags gave different CSV");
    let text = stdout(&first);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# gradnoise-csv v1 kind=curve"));
    assert_eq!(lines.next(), Some("rho,J,alpha,beta,param"));
    let mut rows = 0;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 5, "row {line:?}");
        for cell in cells {
            cell.parse::<f64>().expect("numeric cell");
        }
        rows += 1;
    }
    assert!(rows >= 2, "expected a multi-point Pareto curve, got {rows}");
}

#[test]
fn tradeoff_empty_sweep_exits_two_with_machine_readable_error() {
    let out = run(&[
        "tradeoff", "--method", "gd", "--spectrum", "0.1,1", "--tau-grid", "1:10:0",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).is_empty());
    let err = error_json(&out);
    assert_eq!(err["error"]["code"], "EMPTY_GRID");
}

#[test]
fn tradeoff_with_endpoints_only_reports_upper_bound_provenance() {
    let out = run(&[
        "tradeoff", "--method", "ag", "--mu", "0.1", "--L", "1", "--d", "5", "--tau", "1",
        "--format", "json",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["provenance"], "upper-bound");
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.len(), 1);
    assert!(points[0]["rho"].as_f64().unwrap() < 1.0);
    assert!(points[0]["beta"].as_f64().unwrap() >= 0.0);
}

#[test]
fn certify_gd_min_rho_matches_the_fastest_rate_value() {
    let out = run(&[
        "certify", "--method", "gd", "--mu", "0.1", "--L", "1", "--alpha",
        "1.8181818181818181", "--format", "json",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let v = json(&out);
    assert!((v["rho"].as_f64().unwrap() - 0.8182).abs() < 2e-4);
    assert!(v["slack_min_eig"].as_f64().unwrap() >= -1e-10);
    assert!(v["bound_r"].as_f64().unwrap() > 0.0);
}

#[test]
fn certify_gd_eps_grid_marks_unreachable_rates_infeasible_in_csv() {
    let out = run(&[
        "certify", "--method", "gd", "--mu", "0.1", "--L", "1", "--d", "2", "--eps-grid",
        "0:0.5:3", "--format", "csv",
    ]);
    assert_eq!(code(&out), 0, "infeasible entries must not fail the sweep");
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# gradnoise-csv v1 kind=curve");
    assert_eq!(lines[1], "rho,J,alpha,beta,param");
    assert_eq!(lines.len(), 5);
    assert!(!lines[2].contains("INFEASIBLE"));
    // eps = 0.5 asks for rate 1.5 * (kappa-1)/(kappa+1) > 1: impossible.
    assert!(lines[4].contains(",INFEASIBLE,,,"));
}

#[test]
fn certify_ag_eps_grid_certifies_feasible_slacks_and_flags_the_rest() {
    let out = run(&[
        "certify", "--method", "ag", "--mu", "1", "--L", "10", "--d", "1", "--eps-grid",
        "0.05:0.5:2", "--format", "json",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["provenance"], "sdp-cert");
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.len(), 2);
    let rho_bar = (1.0f64 - 1.0 / 10.0f64.sqrt()).sqrt();
    assert_eq!(points[0]["status"], "ok");
    assert!((points[0]["rho"].as_f64().unwrap() - 1.05 * rho_bar).abs() < 1e-12);
    assert!(points[0]["j"].as_f64().unwrap() > 0.0);
    assert!(points[0]["alpha"].as_f64().unwrap() > 0.0);
    assert_eq!(points[1]["status"], "infeasible");
    assert!(points[1]["rho"].as_f64().unwrap() >= 1.0);
}

#[test]
fn simulate_is_reproducible_and_matches_memoryless_closed_forms() {
    let args = [
        "simulate", "--method", "gd", "--spectrum", "1", "--alpha", "1", "--sigma", "1",
        "--replicas", "300", "--kmax", "300", "--seed", "42", "--format", "json",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(code(&first), 0, "stderr: {}", stderr(&first));
    assert_eq!(first.stdout, second.stdout, "same seed gave different estimates");
    let v = json(&first);
    let jhat = v["jhat"].as_f64().unwrap();
    let se = v["jhat_stderr"].as_f64().unwrap();
    assert!((jhat - 0.5).abs() <= 3.0 * se, "jhat = {jhat}, se = {se}");
    let jp = v["jprime_hat"].as_f64().unwrap();
    let jpse = v["jprime_stderr"].as_f64().unwrap();
    assert!((jp - 1.0).abs() <= 3.0 * jpse);
}

#[test]
fn simulate_writes_per_replica_trajectories() {
    let path = tmp_path("traj.csv");
    let path_str = path.to_str().unwrap();
    let out = run(&[
        "simulate", "--method", "gd", "--spectrum", "0.5,1.5", "--alpha", "0.5", "--sigma",
        "0.1", "--replicas", "3", "--kmax", "50", "--traj-out", path_str, "--format", "json",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&path).expect("trajectory file written");
    std::fs::remove_file(&path).ok();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# gradnoise-csv v1 kind=trajectory");
    assert_eq!(lines[1], "k,replica,subopt,dist2");
    assert_eq!(lines.len(), 2 + 3 * 51, "3 replicas, k = 0..=50");
    assert!(lines[2].starts_with("0,0,"));
    assert!(lines.last().unwrap().starts_with("50,2,"));
}

#[test]
fn simulate_sigma_zero_trajectory_decays_monotonically() {
    let path = tmp_path("decay.csv");
    let path_str = path.to_str().unwrap();
    let out = run(&[
        "simulate", "--method", "gd", "--spectrum", "0.1,1", "--alpha", "1.0", "--sigma", "0",
        "--kmax", "300", "--traj-out", path_str, "--format", "json",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let v = json(&out);
    assert!(v["jhat"].is_null());
    let text = std::fs::read_to_string(&path).expect("trajectory file written");
    std::fs::remove_file(&path).ok();
    let subopts: Vec<f64> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(subopts.len(), 301);
    for w in subopts.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "non-monotone: {} -> {}", w[0], w[1]);
    }
    assert!(subopts[300] < 1e-8 * subopts[0]);
    // JSON is full precision, the CSV rounds to 12 significant digits.
    let final_subopt = v["final_subopt"].as_f64().unwrap();
    assert!(
        (final_subopt - subopts[300]).abs() <= 1e-11 * final_subopt.abs(),
        "report and trajectory disagree: {final_subopt} vs {}",
        subopts[300]
    );
}

#[test]
fn pareto_csv_lists_ag_points_at_gd_rate_caps() {
    let out = run(&[
        "pareto", "--spectrum", "0.1,1", "--tau-grid", "0.5:5:5", "--format", "csv",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# gradnoise-csv v1 kind=curve");
    assert_eq!(lines[1], "rho,J,alpha,beta,param");
    for line in &lines[2..] {
        let cells: Vec<&str> = line.split(',').collect();
        let rho: f64 = cells[0].parse().unwrap();
        let cap: f64 = cells[4].parse().unwrap();
        assert!(rho <= cap + 1e-12, "AG exceeded its rate cap: {line}");
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_override_it() {
    let path = tmp_path("config.txt");
    let path_str = path.to_str().unwrap();
    std::fs::write(
        &path,
        "# example configuration\nmethod = gd\nspectrum = 0.1,1\ntau = 2\nformat = json\n",
    )
    .unwrap();
    let from_config = run(&["tradeoff", "--config", path_str]);
    assert_eq!(code(&from_config), 0, "stderr: {}", stderr(&from_config));
    let v = json(&from_config);
    assert_eq!(v["points"][0]["param"].as_f64().unwrap(), 2.0);
    let overridden = run(&["tradeoff", "--config", path_str, "--tau", "5"]);
    let w = json(&overridden);
    std::fs::remove_file(&path).ok();
    assert_eq!(w["points"][0]["param"].as_f64().unwrap(), 5.0);
    assert!(
        w["points"][0]["rho"].as_f64().unwrap() < v["points"][0]["rho"].as_f64().unwrap(),
        "a heavier rate penalty must pick a faster point"
    );
}

#[test]
fn out_flag_writes_the_report_to_a_file_and_keeps_stdout_empty() {
    let path = tmp_path("report.json");
    let path_str = path.to_str().unwrap();
    let out = run(&[
        "analyze", "--method", "gd", "--spectrum", "0.1,1", "--alpha", "1.5055", "--format",
        "json", "--out", path_str,
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).is_empty());
    let text = std::fs::read_to_string(&path).expect("report file written");
    std::fs::remove_file(&path).ok();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!((v["j"].as_f64().unwrap() - 1.9294).abs() < 1e-3);
}

#[test]
fn validation_errors_emit_error_json_on_stderr() {
    // Missing problem description.
    let out = run(&["analyze", "--method", "gd", "--alpha", "0.5"]);
    assert_eq!(code(&out), 2);
    let err = error_json(&out);
    assert_eq!(err["error"]["code"], "USAGE");
    assert!(err["error"]["message"].as_str().unwrap().contains("--mu"));
    // Library-level validation: eigenvalues must be positive.
    let out = run(&["analyze", "--method", "gd", "--spectrum", "0,1", "--alpha", "0.5"]);
    assert_eq!(code(&out), 2);
    let err = error_json(&out);
    assert_eq!(err["error"]["code"], "INVALID_ARGUMENT");
}

#[test]
fn clap_usage_errors_exit_two_and_help_exits_zero() {
    let bad = run(&["analyze", "--no-such-flag"]);
    assert_eq!(code(&bad), 2);
    let help = run(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(stdout(&help).contains("tradeoff"));
    let sub_help = run(&["simulate", "--help"]);
    assert_eq!(code(&sub_help), 0);
    assert!(stdout(&sub_help).contains("--traj-out"));
}
