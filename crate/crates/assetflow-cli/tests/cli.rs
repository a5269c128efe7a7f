//! End-to-end tests of the `assetflow` binary: subcommand surfaces, file
//! outputs, and the exit-code contract (0 ok, 1 usage, 2 validation,
//! 3 numerical failure).

use std::path::PathBuf;
use std::process::{Command, Output};

fn assetflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_assetflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("assetflow-cli-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn usage_error_exits_one() {
    let out = assetflow(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = assetflow(&["simulate"]); // missing required --scenario
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = assetflow(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "simulate",
        "equilibrium",
        "calibrate",
        "stability",
        "bifurcate",
        "wealth-stats",
        "scenario",
    ] {
        assert!(text.contains(sub), "help is missing `{sub}`");
    }
}

#[test]
fn missing_scenario_file_exits_two() {
    let out = assetflow(&["simulate", "--scenario", "/nonexistent/file.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/file.toml"));
}

#[test]
fn invalid_scenario_exits_two() {
    let path = tmp("bad.toml");
    std::fs::write(&path, "[[assets]]\nname = \"a\"\n").unwrap();
    let out = assetflow(&["simulate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(&path).ok();
}

#[test]
fn numerical_failure_exits_three() {
    // All baseline sell rates zero: no per-asset factor can satisfy the
    // calibration condition.
    let path = tmp("uncalibratable.toml");
    std::fs::write(
        &path,
        r#"
[[assets]]
name = "a"
fundamental_price = 80.0
adjustment_timescale = 1.0

[[groups]]
name = "g"
cash = 1.0e6
shares = 1000.0
c1 = 0.1
c2 = 0.1

[groups.rates]
form = "value-linear"
value_baseline = 0.2
"#,
    )
    .unwrap();
    let out = assetflow(&["calibrate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("calibration impossible"));
    std::fs::remove_file(&path).ok();

    // Negative starting prices are a validation failure, not numerical.
    let out = assetflow(&[
        "equilibrium",
        "--scenario",
        "oil_nigeria_libya",
        "--from-prices=-5.0,-5.0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_csv_and_svg() {
    let csv = tmp("traj.csv");
    let svg = tmp("traj.svg");
    let out = assetflow(&[
        "simulate",
        "--scenario",
        "oil_nigeria_libya",
        "--t-end",
        "50",
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,P.nigeria,P.libya,zeta1.nigeria.usa"));
    assert_eq!(text.lines().count(), 502); // header + 501 samples at 0.1 d
    let svg_text = std::fs::read_to_string(&svg).unwrap();
    assert!(svg_text.starts_with("<svg"));
    std::fs::remove_file(&csv).ok();
    std::fs::remove_file(&svg).ok();
}

#[test]
fn stability_reports_classification() {
    let out = assetflow(&["stability", "--scenario", "oil_nigeria_libya"]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("classification: stable"), "{stderr}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 11); // header + 10 eigenvalues
}

#[test]
fn bifurcate_reports_threshold_and_writes_diagram() {
    let csv = tmp("diagram.csv");
    let svg = tmp("diagram.svg");
    let out = assetflow(&[
        "bifurcate",
        "--scenario",
        "oil_nigeria_libya",
        "--points",
        "5",
        "--t-end",
        "300",
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("eigenvalue threshold: 0.327"), "{stderr}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("# threshold_eigen ="));
    assert!(text.contains("param,max_re_lambda,amplitude.nigeria"));
    std::fs::remove_file(&csv).ok();
    std::fs::remove_file(&svg).ok();
}

#[test]
fn print_effective_round_trips() {
    let out = assetflow(&[
        "scenario",
        "print-effective",
        "--scenario",
        "oil_nigeria_libya",
        "--self-check",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("name = \"oil_nigeria_libya\""));
    assert!(text.contains("mode = \"closed-flow\""));
    // The printed document is itself a loadable scenario.
    let path = tmp("effective.toml");
    std::fs::write(&path, text.as_bytes()).unwrap();
    let out2 = assetflow(&[
        "scenario",
        "print-effective",
        "--scenario",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out2.status.code(), Some(0));
    assert_eq!(text, String::from_utf8_lossy(&out2.stdout));
    std::fs::remove_file(&path).ok();
}

#[test]
fn calibrate_emits_loadable_scenario() {
    let path = tmp("calibrated.toml");
    let out = assetflow(&[
        "calibrate",
        "--scenario",
        "gas_market",
        "--seed",
        "7",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out2 = assetflow(&[
        "stability",
        "--scenario",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out2.status.code(), Some(0));
    std::fs::remove_file(&path).ok();
}

#[test]
fn wealth_stats_prints_per_group_rows() {
    let out = assetflow(&[
        "wealth-stats",
        "--scenario",
        "oil_nigeria_libya",
        "--t-end",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("group,mean,std,min,max"));
    assert!(stdout.contains("usa,"));
    assert!(stdout.contains("china,"));
}
