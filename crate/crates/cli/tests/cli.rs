use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn demandid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_demandid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    let mut all = vec!["simulate"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", s(&path)]);
    let o = demandid(&all);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    path
}

fn write_csv(dir: &TempDir, name: &str, values: &[f64]) -> PathBuf {
    let mut text = String::from("period,value\n");
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("{},{v}\n", i + 1));
    }
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn simulate_lumpy_sits_on_the_floor() {
    let dir = TempDir::new().unwrap();
    let path = simulate(
        &dir,
        "l.csv",
        &["--type", "lumpy", "--n", "240", "--seed", "7", "--base-level", "1000"],
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("period,value"));
    let values: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 240);
    assert!(values.iter().all(|&v| v >= 1000.0));
    assert!(values.contains(&1000.0));
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = simulate(&dir, "a.csv", &["--type", "stochastic", "--seed", "11"]);
    let b = simulate(&dir, "b.csv", &["--type", "stochastic", "--seed", "11"]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn simulate_without_type_is_a_usage_error() {
    assert_eq!(demandid(&["simulate"]).status.code(), Some(2));
}

#[test]
fn classify_names_lumpy_demand() {
    let dir = TempDir::new().unwrap();
    let path = simulate(&dir, "l.csv", &["--type", "lumpy", "--seed", "3", "--base-level", "1000"]);
    let o = demandid(&["classify", "--in", s(&path), "--mc", "200"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row = out
        .lines()
        .find(|l| l.starts_with("Exponential"))
        .expect("winning row");
    assert!(row.contains("Lumpy"), "{out}");
}

#[test]
fn classify_constant_series_exits_3() {
    let dir = TempDir::new().unwrap();
    let path = write_csv(&dir, "c.csv", &[5.0; 40]);
    let o = demandid(&["classify", "--in", s(&path)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("DegenerateSample"));
}

#[test]
fn classify_json_matches_text() {
    let dir = TempDir::new().unwrap();
    let path = simulate(&dir, "st.csv", &["--type", "stochastic", "--seed", "2"]);
    let json = demandid(&["classify", "--in", s(&path), "--mc", "200", "--format", "json"]);
    let text = demandid(&["classify", "--in", s(&path), "--mc", "200"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).expect("valid json");
    let report = &v["report"];
    assert_eq!(report["demand_class"], "Stochastic");
    let d = report["winning_fit"]["ks_statistic"].as_f64().unwrap();
    let p = report["winning_fit"]["p_value"].as_f64().unwrap();
    let out = stdout(&text);
    let row: Vec<&str> = out
        .lines()
        .find(|l| l.starts_with("Normal"))
        .unwrap()
        .split_whitespace()
        .collect();
    let nums: Vec<f64> = row.iter().filter_map(|t| t.parse().ok()).collect();
    assert!((nums[0] - d).abs() < 1e-12);
    assert!((nums[1] - p).abs() < 1e-12);
}

#[test]
fn csv_gap_reports_the_row() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("gap.csv");
    std::fs::write(&path, "period,value\n1,5\n2,6\n4,7\n").unwrap();
    let o = demandid(&["classify", "--in", s(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));
}

#[test]
fn forecast_auto_picks_holt_winters_for_lumpy() {
    let dir = TempDir::new().unwrap();
    let path = simulate(&dir, "l.csv", &["--type", "lumpy", "--seed", "3", "--base-level", "1000"]);
    let o = demandid(&[
        "forecast", "--in", s(&path), "--method", "auto", "--horizon", "4", "--mc", "200", "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "step,forecast");
    assert_eq!(lines.len(), 5);
    let text = demandid(&[
        "forecast", "--in", s(&path), "--method", "auto", "--horizon", "4", "--mc", "200",
    ]);
    assert!(stdout(&text).contains("method: hw-add"));
}

#[test]
fn forecast_multiplicative_rejects_zeros() {
    let dir = TempDir::new().unwrap();
    let values: Vec<f64> = (0..48).map(|t| if t % 5 == 0 { 0.0 } else { 10.0 }).collect();
    let path = write_csv(&dir, "z.csv", &values);
    let o = demandid(&["forecast", "--in", s(&path), "--method", "hw-mult", "--horizon", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NonPositiveForMultiplicative"));
}

#[test]
fn forecast_horizon_zero_is_rejected() {
    let dir = TempDir::new().unwrap();
    let path = simulate(&dir, "s.csv", &["--type", "stochastic"]);
    let o = demandid(&["forecast", "--in", s(&path), "--method", "ses", "--horizon", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn evaluate_builds_the_matrix() {
    let dir = TempDir::new().unwrap();
    let c = simulate(&dir, "cy.csv", &["--type", "cyclical", "--seed", "1"]);
    let st = simulate(&dir, "st.csv", &["--type", "stochastic", "--seed", "2"]);
    let l = simulate(&dir, "lu.csv", &["--type", "lumpy", "--seed", "3"]);
    let inputs = format!("{},{},{}", s(&c), s(&st), s(&l));
    let o = demandid(&["evaluate", "--in", &inputs, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 20);
    for label in ["cy", "st", "lu", "mean"] {
        assert_eq!(rows.iter().filter(|r| r.split(',').nth(1) == Some(label)).count(), 5);
    }
    let text = stdout(&demandid(&["evaluate", "--in", &inputs]));
    assert!(text.contains("recommended"));
    assert!(text.contains("mean"));
}

#[test]
fn evaluate_unreadable_file_exits_2() {
    let dir = TempDir::new().unwrap();
    let c = simulate(&dir, "cy.csv", &["--type", "cyclical"]);
    let missing = dir.path().join("missing.csv");
    let o = demandid(&["evaluate", "--in", &format!("{},{}", s(&c), s(&missing))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn recommend_stochastic_reports_normal() {
    let dir = TempDir::new().unwrap();
    let path = simulate(&dir, "st.csv", &["--type", "stochastic", "--seed", "2"]);
    let o = demandid(&["recommend", "--in", s(&path), "--mc", "200"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("demand type: Stochastic"));
    assert!(out.contains("distribution: Normal fit"));
    assert!(out.contains("recommended method: stepar"));
    assert!(out.contains("improvement vs runner-up:"));
}

#[test]
fn recommend_unclassified_falls_back_with_warning() {
    let dir = TempDir::new().unwrap();
    let values: Vec<f64> = (0..240)
        .map(|t| if t % 2 == 0 { 1000.0 } else { 100.0 } + ((t * 7) % 5) as f64)
        .collect();
    let path = write_csv(&dir, "bi.csv", &values);
    let o = demandid(&["recommend", "--in", s(&path), "--mc", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("demand type: Unclassified"));
    assert!(out.contains("warning:"));
    assert!(out.contains("from the lowest holdout MSE"));
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let path = simulate(&dir, "st.csv", &["--type", "stochastic", "--seed", "2"]);
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "ses_alpha = 0.25\n").unwrap();
    let from_file = stdout(&demandid(&[
        "forecast", "--in", s(&path), "--method", "ses", "--horizon", "1", "--config", s(&cfg),
    ]));
    assert!(from_file.contains("alpha=0.25"), "{from_file}");
    let overridden = stdout(&demandid(&[
        "forecast", "--in", s(&path), "--method", "ses", "--horizon", "1", "--config", s(&cfg),
        "--ses-alpha", "0.5",
    ]));
    assert!(overridden.contains("alpha=0.5"), "{overridden}");

    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let bad = demandid(&[
        "forecast", "--in", s(&path), "--method", "ses", "--horizon", "1", "--config", s(&cfg),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}
