use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bindsym(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bindsym"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn zero_steps_write_a_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_steps = 0\n");
    let out = bindsym(dir.path(), &["integrate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "t,q,p,x,y,H,Hbar");
    assert!(lines[1].starts_with("0.0000000000000000e0,-3.0000000000000000e0,"));
}

#[test]
fn multi_dimensional_header_indexes_components() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "system = \"nls\"\nmodes = 2\nn_steps = 1\n");
    assert_eq!(bindsym(dir.path(), &["integrate", "--config", &cfg]).status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,q1,q2,p1,p2,x1,x2,y1,y2,H,Hbar");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t_end = 5.0\nstride = 3\nomega = 40.0\n");
    bindsym(dir.path(), &["integrate", "--config", &cfg]);
    let first = fs::read(dir.path().join("trajectory.csv")).unwrap();
    bindsym(dir.path(), &["integrate", "--config", &cfg, "--workers", "2"]);
    let second = fs::read(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn sidecar_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t_end = 2.0\ndelta = 0.02\nprojection = \"mean\"\n");
    bindsym(dir.path(), &["integrate", "--config", &cfg]);
    let csv = fs::read(dir.path().join("trajectory.csv")).unwrap();
    let meta = dir.path().join("integrate.meta.toml");
    let meta_text = fs::read_to_string(&meta).unwrap();
    assert!(meta_text.contains("# version: bindsym "));

    let again = tempfile::tempdir().unwrap();
    let out = bindsym(again.path(), &["integrate", "--config", meta.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(again.path().join("trajectory.csv")).unwrap(), csv);
    let meta2 = fs::read_to_string(again.path().join("integrate.meta.toml")).unwrap();
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("output")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&meta_text), strip(&meta2));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "delta = 0.01\nstep_size = 0.1\n");
    let out = bindsym(dir.path(), &["integrate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step_size"));
}

#[test]
fn invalid_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "order = 3\n");
    let out = bindsym(dir.path(), &["integrate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("order"));
    let bad = bindsym(dir.path(), &["integrate", "--preset", "nope"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn escape_is_a_numeric_abort_recorded_in_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q0 = [50.0]\np0 = [50.0]\nt_end = 10.0\nescape_bound = 100.0\n");
    let out = bindsym(dir.path(), &["integrate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    let meta = fs::read_to_string(dir.path().join("integrate.meta.toml")).unwrap();
    assert!(meta.contains("# status: aborted"), "{meta}");
    assert!(fs::read_to_string(dir.path().join("trajectory.csv")).unwrap().lines().count() >= 2);
}

#[test]
fn single_point_table_has_no_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "omegas = [20.0]\nt_end = 5.0\n");
    let out = bindsym(dir.path(), &["table", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let table = fs::read_to_string(dir.path().join("table_omega.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(!dir.path().join("table_omega_fit.csv").exists());
}

#[test]
fn omega_table_slope_is_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "omegas = [20.0, 40.0, 80.0]\ndelta = 0.002\nt_end = 10.0\n");
    assert_eq!(bindsym(dir.path(), &["table", "--config", &cfg]).status.code(), Some(0));
    let fit = fs::read_to_string(dir.path().join("table_omega_fit.csv")).unwrap();
    let amp: f64 = fit.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((amp - 1.0).abs() < 0.15, "{amp}");
}

#[test]
fn unreachable_shell_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "shell = 0.1\n");
    let out = bindsym(dir.path(), &["poincare", "--preset", "section-strong", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no admissible initial conditions"));
}

#[test]
fn zero_nls_data_gives_zero_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "system = \"nls\"\nq0 = [0.0, 0.0, 0.0]\np0 = [0.0, 0.0, 0.0]\nt_end = 1.0\nstride = 10\n");
    assert_eq!(bindsym(dir.path(), &["nls", "--config", &cfg]).status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("nls.csv")).unwrap();
    for line in csv.lines().skip(1) {
        assert!(line.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0), "{line}");
    }
}

#[test]
fn compare_against_itself_has_zero_difference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "baseline = \"proposed\"\nt_end = 5.0\n");
    assert_eq!(bindsym(dir.path(), &["compare", "--config", &cfg]).status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let diff: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(diff, 0.0);
    }
}

#[test]
fn check_exit_code_follows_the_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let pass = write_config(dir.path(), "checks = [6]\n");
    assert_eq!(bindsym(dir.path(), &["check", "--config", &pass]).status.code(), Some(0));
    let report = fs::read_to_string(dir.path().join("check.txt")).unwrap();
    assert!(report.starts_with("[PASS]  6"));
    let red = write_config(dir.path(), "checks = [5]\n");
    assert_eq!(bindsym(dir.path(), &["check", "--config", &red]).status.code(), Some(4));
}
