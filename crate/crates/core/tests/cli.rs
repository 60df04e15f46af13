//! Black-box tests of the command-line interface: exit codes, output file
//! shapes, and printed formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ellipsoid-mpc"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run_cli(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| l.to_string()).collect()
}

#[test]
fn run_clean_scenario_exits_zero_with_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("log.csv");
    let res =
        run_cli(&["run", scenario("open_field.json").to_str().unwrap(), out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    let lines = read_lines(&out);
    // duration 20 s at dt 0.2 plus the terminal sample, plus the header.
    assert_eq!(lines.len(), 102);
    assert_eq!(lines[0], "t,x1,x2,theta,u1,u2,u3,status,solve_ms");
    assert!(stdout(&res).contains("wrote 101 rows"));
}

#[test]
fn run_reports_collision_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("log.csv");
    let res =
        run_cli(&["run", scenario("recovery_start.json").to_str().unwrap(), out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(out.exists(), "log must still be written for inspection");
}

#[test]
fn run_rejects_malformed_scenario_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"model\": {},\n  \"durration\": 1.0\n}").unwrap();
    let out = dir.path().join("log.csv");
    let res = run_cli(&["run", bad.to_str().unwrap(), out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let err = stderr(&res);
    assert!(err.contains("line"), "diagnostic must carry a location: {err}");
}

#[test]
fn run_with_noise_appends_measured_pose_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("log.csv");
    let res = run_cli(&[
        "run",
        scenario("open_field.json").to_str().unwrap(),
        out.to_str().unwrap(),
        "--perturb",
        "0.003",
    ]);
    assert_eq!(res.status.code(), Some(0));
    let lines = read_lines(&out);
    assert_eq!(lines[0], "t,x1,x2,theta,u1,u2,u3,status,solve_ms,x1_meas,x2_meas,theta_meas");
}

#[test]
fn run_with_trace_writes_iteration_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("log.csv");
    let res = run_cli(&[
        "run",
        scenario("open_field.json").to_str().unwrap(),
        out.to_str().unwrap(),
        "--trace",
    ]);
    assert_eq!(res.status.code(), Some(0));
    let trace = dir.path().join("log.trace.csv");
    let lines = read_lines(&trace);
    assert_eq!(lines[0], "outer,inner,cost,violation,step_len");
    assert!(lines.len() > 1, "trace must contain accepted iterations");
}

#[test]
fn overlap_reports_disjoint_circles_exactly() {
    let res = run_cli(&["overlap", "--a", "1,1,0,0,0", "--b", "1,1,0,3,0"]);
    assert_eq!(res.status.code(), Some(0));
    let text = stdout(&res);
    assert!(text.contains("kappa_star = -1.2500000000000000e0"), "{text}");
    assert!(text.contains("lambda_star = 5.0000000000000000e-1"), "{text}");
    assert!(text.contains("verdict = disjoint"), "{text}");
}

#[test]
fn overlap_reports_touching_circles_with_exit_zero() {
    let res = run_cli(&["overlap", "--a", "1,1,0,0,0", "--b", "1,1,0,2,0"]);
    assert_eq!(res.status.code(), Some(0));
    assert!(stdout(&res).contains("verdict = touching"));
}

#[test]
fn overlap_flags_intersecting_pair_with_exit_three() {
    let res = run_cli(&["overlap", "--a", "1,1,0,0,0", "--b", "1,1,0,1,0"]);
    assert_eq!(res.status.code(), Some(3));
    let text = stdout(&res);
    assert!(text.contains("verdict = overlap"), "{text}");
    assert!(text.contains("kappa_star = 7.5000000000000000e-1"), "{text}");
}

#[test]
fn overlap_identical_ellipses_report_the_determinant() {
    let res = run_cli(&["overlap", "--a", "2,1,0,0,0", "--b", "2,1,0,0,0"]);
    assert_eq!(res.status.code(), Some(3));
    // det(A) = 1/(2^2 * 1^2) = 0.25 for identical ellipses.
    assert!(stdout(&res).contains("kappa_star = 2.5000000000000000e-1"), "{}", stdout(&res));
}

#[test]
fn invalid_ellipse_spec_exits_one() {
    let res = run_cli(&["overlap", "--a", "1,2,3", "--b", "1,1,0,0,0"]);
    assert_eq!(res.status.code(), Some(1));
    let negative = run_cli(&["overlap", "--a", "-1,1,0,0,0", "--b", "1,1,0,0,0"]);
    assert_eq!(negative.status.code(), Some(1));
}

#[test]
fn curve_writes_header_and_requested_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let res = run_cli(&[
        "curve",
        out.to_str().unwrap(),
        "--a",
        "2,1,0.5,0,0",
        "--b",
        "1,1,0,1.5,0",
        "--samples",
        "41",
    ]);
    assert_eq!(res.status.code(), Some(0));
    let lines = read_lines(&out);
    assert_eq!(lines[0], "lambda,K,Kq");
    assert_eq!(lines.len(), 42);
    // K(0) = K(1) = 1 up to print precision at the endpoints.
    let first: Vec<&str> = lines[1].split(',').collect();
    let last: Vec<&str> = lines[41].split(',').collect();
    assert!((first[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert!((last[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn verify_small_suites_pass_with_exit_zero() {
    let res = run_cli(&["verify", "--pairs", "25", "--seed", "7"]);
    assert_eq!(res.status.code(), Some(0), "output: {}", stdout(&res));
    let text = stdout(&res);
    for suite in ["geometry", "overlap", "solver"] {
        assert!(text.contains(&format!("suite {suite}: 25/25 cases passed")), "{text}");
    }
}

#[test]
fn verify_zero_pairs_is_a_vacuous_pass() {
    let res = run_cli(&["verify", "--pairs", "0"]);
    assert_eq!(res.status.code(), Some(0));
}

#[test]
fn verify_single_suite_runs_only_that_suite() {
    let res = run_cli(&["verify", "--suite", "overlap", "--pairs", "10"]);
    assert_eq!(res.status.code(), Some(0));
    let text = stdout(&res);
    assert!(text.contains("suite overlap"));
    assert!(!text.contains("suite geometry"));
}

#[test]
fn unknown_arguments_exit_one() {
    let res = run_cli(&["frobnicate"]);
    assert_eq!(res.status.code(), Some(1));
    let res = run_cli(&["run", "--bogus"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn repeated_runs_differ_only_in_wall_clock() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let sc = scenario("diffdrive_corridor.json");
    assert_eq!(
        run_cli(&["run", sc.to_str().unwrap(), out_a.to_str().unwrap()]).status.code(),
        Some(0)
    );
    assert_eq!(
        run_cli(&["run", sc.to_str().unwrap(), out_b.to_str().unwrap()]).status.code(),
        Some(0)
    );
    let (la, lb) = (read_lines(&out_a), read_lines(&out_b));
    assert_eq!(la.len(), lb.len());
    let skip = la[0].split(',').position(|c| c == "solve_ms").unwrap();
    for (ra, rb) in la.iter().zip(&lb) {
        let fa: Vec<&str> =
            ra.split(',').enumerate().filter(|(i, _)| *i != skip).map(|(_, c)| c).collect();
        let fb: Vec<&str> =
            rb.split(',').enumerate().filter(|(i, _)| *i != skip).map(|(_, c)| c).collect();
        assert_eq!(fa, fb);
    }
}
