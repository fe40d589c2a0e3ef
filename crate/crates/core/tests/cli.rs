use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn magflow(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_magflow"));
    cmd.args(args).env_remove("MAGFLOW_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let Output { status, stdout, stderr } = cmd.output().expect("spawn magflow");
    Run {
        code: status.code().expect("exit code"),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn write_config(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn run_with(dir: &TempDir, json: &str, args: &[&str]) -> Run {
    let path = write_config(dir, "config.json", json);
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--config", path.to_str().unwrap()]);
    magflow(&full, &[])
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).expect("valid JSON report")
}

fn csv_rows(text: &str) -> (String, Vec<Vec<f64>>) {
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').filter_map(|f| f.parse::<f64>().ok()).collect())
        .collect();
    (header, rows)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn helicity_examples() {
    let dir = TempDir::new().unwrap();
    let run = magflow(&["helicity"], &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let r = json(&run.stdout);
    assert_eq!(r["helicity_formula"].as_f64().unwrap(), 0.0);
    assert!(r["helicity_integral"].as_f64().unwrap().abs() < 1e-6);
    assert_eq!(r["s_h"].as_f64().unwrap(), 1.0);
    assert_eq!(r["chi"].as_f64().unwrap(), -2.0);
    assert!((r["area"].as_f64().unwrap() - 4.0 * PI).abs() < 1e-12);

    let run = run_with(&dir, r#"{"magnetic": {"a": 0.5}}"#, &["helicity"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let r = json(&run.stdout);
    assert!((r["helicity_formula"].as_f64().unwrap() - 6.0 * PI * PI).abs() < 1e-9);
    assert!((r["helicity_formula"].as_f64().unwrap() - 59.218).abs() < 1e-3);
    assert!((r["s_h"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(r["agree"], Value::Bool(true));

    let run = run_with(&dir, r#"{"magnetic": {"a": 0}}"#, &["helicity"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let r = json(&run.stdout);
    assert!((r["helicity_formula"].as_f64().unwrap() - 78.957).abs() < 1e-3);
    assert!(r["s_h"].is_null());
}

#[test]
fn helicity_fails_when_tolerance_cannot_be_met() {
    let dir = TempDir::new().unwrap();
    let config = r#"{"magnetic": {"a": 0.5}, "tolerances": {"helicity_relative": 1e-300}}"#;
    let run = run_with(&dir, config, &["helicity"]);
    assert_eq!(run.code, 1);
    assert_eq!(json(&run.stdout)["agree"], Value::Bool(false));
}

#[test]
fn critical_examples() {
    let dir = TempDir::new().unwrap();
    let fast = r#""crit": {"samples": 200}"#;
    let run = run_with(&dir, &format!("{{{fast}}}"), &["critical"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let r = json(&run.stdout);
    let (lo, hi) = (r["estimate"]["lower"].as_f64().unwrap(), r["estimate"]["upper"].as_f64().unwrap());
    assert!(lo >= 0.495 && hi <= 0.5 + 1e-10, "[{lo}, {hi}]");
    let s_c = &r["s_c"];
    assert!(s_c["lower"].as_f64().unwrap() <= 1.0 + 1e-12 && s_c["upper"].as_f64().unwrap() >= 1.0);
    assert_eq!(r["s_h"].as_f64().unwrap(), 1.0);
    assert!(r["proposition"]["rhs"].as_f64().unwrap().abs() > 0.99);

    let run = run_with(&dir, &format!(r#"{{"magnetic": {{"a": 0.5}}, {fast}}}"#), &["critical"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let r = json(&run.stdout);
    let (lo, hi) = (r["estimate"]["lower"].as_f64().unwrap(), r["estimate"]["upper"].as_f64().unwrap());
    assert!(lo >= 0.1237 && (hi - 0.125).abs() < 1e-10, "[{lo}, {hi}]");

    let bumped = format!(
        r#"{{"metric": {{"bumps": [{{"center": {{"x": 0, "y": 1}}, "amplitude": 0.2, "support_radius": 1.5}}]}}, {fast}}}"#
    );
    let run = run_with(&dir, &bumped, &["critical"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let r = json(&run.stdout);
    assert!(r["theorem"]["gap"].as_f64().unwrap() > 0.0);
    assert!(r["theorem"]["rho_g"].as_f64().unwrap() < 1.0);
}

#[test]
fn critical_without_flux_has_no_theorem_section() {
    let dir = TempDir::new().unwrap();
    let run = run_with(&dir, r#"{"magnetic": {"a": 0}, "crit": {"samples": 50}}"#, &["critical"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let r = json(&run.stdout);
    assert!(r["theorem"].is_null() && r["s_h"].is_null());
    assert_eq!(r["estimate"]["upper"].as_f64().unwrap(), 0.0);
}

#[test]
fn negative_bound_tolerance_rejected() {
    let dir = TempDir::new().unwrap();
    let run = run_with(&dir, r#"{"tolerances": {"bound": -1}}"#, &["critical"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("tolerances.bound"), "{}", run.stderr);
}

#[test]
fn flow_period_examples() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("orbit.csv");
    let start = r#""initial": {"x": 0.2, "y": 1.3, "theta": 0.7}"#;
    let config = format!(r#"{{"magnetic": {{"a": 2}}, "flow": {{"s": 1, "T": 5.5, "dt": 0.01, {start}}}}}"#);
    let path = write_config(&dir, "orbit.json", &config);
    let run = magflow(&["flow", "--config", path.to_str().unwrap(), "--output", out.to_str().unwrap()], &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let period: f64 = run.stdout.trim().strip_prefix("period: ").unwrap().parse().unwrap();
    assert!((period - 2.0 * PI / 3f64.sqrt()).abs() < 1e-5);
    assert!((period - 3.6276).abs() < 1e-4);
    let (header, rows) = csv_rows(&read(&out));
    assert_eq!(header, "t,x,y,theta");
    assert_eq!(rows.len(), 551);
    assert!(rows.iter().all(|r| r.len() == 4));
    assert_eq!(rows[0], vec![0.0, 0.2, 1.3, 0.7]);
    assert!((rows[550][0] - 5.5).abs() < 1e-12);

    let config = format!(r#"{{"magnetic": {{"a": 1}}, "flow": {{"s": 1.4142135623730951, "T": 8, {start}}}}}"#);
    let run = run_with(&dir, &config, &["flow", "--output", out.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let period: f64 = run.stdout.trim().strip_prefix("period: ").unwrap().parse().unwrap();
    assert!((period - 2.0 * PI).abs() < 1e-5);
}

#[test]
fn flow_geodesic_has_no_period() {
    let dir = TempDir::new().unwrap();
    let run = run_with(&dir, r#"{"magnetic": {"a": 0}, "flow": {"T": 10}}"#, &["flow"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stderr.contains("period: none"));
    let (header, rows) = csv_rows(&run.stdout);
    assert_eq!(header, "t,x,y,theta");
    assert_eq!(rows.len(), 1001);
}

#[test]
fn flow_blow_up_exits_one() {
    let dir = TempDir::new().unwrap();
    let run = run_with(&dir, r#"{"magnetic": {"a": 50}, "flow": {"T": 5, "dt": 0.5}}"#, &["flow"]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("integrator"), "{}", run.stderr);
}

#[test]
fn radon_kernel_table() {
    let dir = TempDir::new().unwrap();
    let config = r#"{"radon": {"r_grid": [1], "s_list": [0], "alpha_list": []}}"#;
    let run = run_with(&dir, config, &["radon", "kernel"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let lines: Vec<&str> = run.stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "r,kind,s_or_alpha,value");
    let value: f64 = lines[1].strip_prefix("1,real,0,").unwrap().parse().unwrap();
    assert_eq!(value, magflow::radon::q_kernel_real(1.0, 0.0).unwrap());

    let config = r#"{"radon": {"r_grid": [0.5, 2], "s_list": [1], "alpha_list": [0.5]}}"#;
    let run = run_with(&dir, config, &["radon", "kernel"]);
    let (_, rows) = csv_rows(&run.stdout);
    assert_eq!(rows.len(), 4);
    for row in rows.iter().filter(|r| r.len() == 3 && r[1] == 0.5) {
        let r = row[0];
        assert!((row[2] - 2.0 * PI * (r.cosh() - 1.0)).abs() < 1e-9 * row[2]);
    }
}

#[test]
fn radon_growth_and_mean_value() {
    let dir = TempDir::new().unwrap();
    let run = run_with(&dir, r#"{"radon": {"growth_s": [1], "growth_n": 3}}"#, &["radon", "growth"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (header, rows) = csv_rows(&run.stdout);
    assert_eq!(header, "s,n,r,q,bound");
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[3] >= r[4]));
    assert!(rows.windows(2).all(|w| w[1][3] > w[0][3]));

    let run = magflow(&["radon", "meanvalue"], &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.starts_with("s,part,center_x,center_y,r,lhs,rhs,residual\n"));
    assert_eq!(run.stdout.lines().count(), 1 + 3 * 4 * 2 * 2);
}

#[test]
fn radon_probe_of_zero_is_zero() {
    let dir = TempDir::new().unwrap();
    let config = r#"{"radon": {"h": {"constant": 0, "bumps": []}, "r_grid": [1, 2, 4]}}"#;
    let run = run_with(&dir, config, &["radon", "probe"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (header, rows) = csv_rows(&run.stdout);
    assert_eq!(header, "r,x_index,value");
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[2] == 0.0));
    assert!(run.stderr.contains("running max: 0"));

    let run = run_with(&dir, r#"{"radon": {"h": {"constant": 1}}}"#, &["radon", "probe"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("radon.h.constant"), "{}", run.stderr);
}

#[test]
fn config_errors_exit_two_with_field_path() {
    let dir = TempDir::new().unwrap();
    let run = run_with(&dir, r#"{"magnetic": {"a": "strong"}}"#, &["helicity"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("magnetic.a"), "{}", run.stderr);

    let run = run_with(&dir, r#"{"tolerances": {"geometry": -1e-8}}"#, &["verify"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("tolerances.geometry"), "{}", run.stderr);

    let big = r#"{"metric": {"bumps": [{"center": {"x": 0, "y": 1}, "amplitude": 0.1, "support_radius": 4}]}}"#;
    let run = run_with(&dir, big, &["helicity"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("metric.bumps[0]"), "{}", run.stderr);

    let missing = dir.path().join("absent.json");
    let run = magflow(&["verify", "--config", missing.to_str().unwrap()], &[]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("cannot read config"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(magflow(&[], &[]).code, 2);
    assert_eq!(magflow(&["radon"], &[]).code, 2);
    assert_eq!(magflow(&["radon", "spectrum"], &[]).code, 2);
    assert_eq!(magflow(&["helicity", "--unknown"], &[]).code, 2);
    assert_eq!(magflow(&["--help"], &[]).code, 0);
    let run = magflow(&["radon", "growth"], &[("MAGFLOW_THREADS", "zero")]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("MAGFLOW_THREADS"));
    assert_eq!(magflow(&["radon", "growth"], &[("MAGFLOW_THREADS", "0")]).code, 2);
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "c.json", r#"{"radon": {"r_grid": [1, 3]}, "magnetic": {"a": 0.5}}"#);
    let c = config.to_str().unwrap();
    for args in [vec!["radon", "probe"], vec!["radon", "kernel"], vec!["helicity"]] {
        let mut full = args.clone();
        full.extend(["--config", c]);
        let one = magflow(&full, &[]);
        let two = magflow(&full, &[("MAGFLOW_THREADS", "2")]);
        assert_eq!(one.code, 0, "{}", one.stderr);
        assert_eq!(one.stdout, two.stdout, "{args:?}");
    }
    let out = dir.path().join("k.csv");
    let run = magflow(&["radon", "kernel", "--config", c, "--output", out.to_str().unwrap()], &[]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.is_empty());
    assert_eq!(read(&out), magflow(&["radon", "kernel", "--config", c], &[]).stdout);
}
