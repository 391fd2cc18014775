use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pdp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn pdp")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = pdp(args, cwd);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn generated(cwd: &Path) {
    ok(&["generate", "--households", "20", "--seed", "5", "--out", "in.csv"], cwd);
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "--households", "3", "--seed", "9", "--out", "a.csv"], dir.path());
    ok(&["generate", "--households", "3", "--seed", "9", "--out", "b.csv"], dir.path());
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(dir.path().join("b.csv")).unwrap());
    assert!(a.starts_with("timestamp,H001,H002,H003\n"));
    assert_eq!(a.lines().count(), 145);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdp(&["generate", "--households", "0", "--out", "x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(pdp(&["bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(pdp(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn missing_input_exits_two_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdp(&["run", "--input", "nope.csv", "--out-dir", "o", "--seed", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io_error]"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn malformed_csv_reports_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "timestamp,H001\nnot-a-time,1\n").unwrap();
    let out = pdp(&["run", "--input", "bad.csv", "--out-dir", "o", "--seed", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error["));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn run_writes_reports_and_utility_first_mae_matches() {
    let dir = tempfile::tempdir().unwrap();
    generated(dir.path());
    let out = ok(
        &["--format", "json", "run", "--input", "in.csv", "--upper", "10", "--profile", "utility-first", "--seed", "3", "--out-dir", "o"],
        dir.path(),
    );
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["epsilon"], 2.0);
    let mae = v["mae"].as_f64().unwrap();
    assert!((mae - 5.0).abs() / 5.0 < 0.05, "mae {mae}");
    for f in ["noisy.csv", "utility.json", "impact.json"] {
        assert!(dir.path().join("o").join(f).exists(), "{f}");
    }
    let impact: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("o/impact.json")).unwrap()).unwrap();
    assert_eq!(impact["privacy_score"], 2.1);
}

#[test]
fn policy_cap_limits_selection() {
    let dir = tempfile::tempdir().unwrap();
    generated(dir.path());
    let out = ok(
        &["--format", "json", "run", "--input", "in.csv", "--profile", "utility-first", "--compliance-required", "true", "--policy", "strict", "--seed", "1", "--out-dir", "o"],
        dir.path(),
    );
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["epsilon"].as_f64().unwrap() <= 0.5);
}

#[test]
fn sweep_writes_chart_files() {
    let dir = tempfile::tempdir().unwrap();
    generated(dir.path());
    let out = ok(
        &["--format", "json", "sweep", "--input", "in.csv", "--upper", "10", "--seeds-per-point", "5", "--out", "chart.json"],
        dir.path(),
    );
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["spearman"], -1.0);
    let csv = std::fs::read_to_string(dir.path().join("chart.csv")).unwrap();
    assert!(csv.starts_with("epsilon,mae,expected_mae\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn sweep_rejects_out_of_range_grid() {
    let dir = tempfile::tempdir().unwrap();
    generated(dir.path());
    let out = pdp(&["sweep", "--input", "in.csv", "--grid", "0.1,5.0", "--out", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[invalid_grid]"));
    assert!(!dir.path().join("c.json").exists());
}

#[test]
fn profiles_table_shows_decreasing_error() {
    let dir = tempfile::tempdir().unwrap();
    generated(dir.path());
    let out = ok(&["--format", "json", "profiles", "--input", "in.csv", "--out", "p.json"], dir.path());
    let v: Value = serde_json::from_str(&out).unwrap();
    let mae: Vec<f64> = v["profiles"].as_array().unwrap().iter().map(|p| p["mae"].as_f64().unwrap()).collect();
    assert!(mae[0] > mae[1] && mae[1] > mae[2], "{mae:?}");
    assert!(dir.path().join("p.json").exists());

    let table = ok(&["profiles", "--input", "in.csv"], dir.path());
    assert!(table.contains("Selected ε"));
    assert!(table.contains("Privacy score  4.8"));
}
