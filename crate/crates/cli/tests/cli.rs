use std::path::Path;
use std::process::{Command, Output};

fn opinion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opinion")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn export_fixtures(dir: &Path) {
    let out = opinion(&["fixtures", "--export", dir.to_str().unwrap()]);
    assert!(out.status.success());
}

#[test]
fn fixtures_lists_catalog() {
    let out = opinion(&["fixtures"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["example1", "sec5-coop", "sec5-antag-stable"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn analyze_exported_example1_is_consensus() {
    let dir = tempfile::tempdir().unwrap();
    export_fixtures(dir.path());
    let system = dir.path().join("example1.json");
    let x0 = dir.path().join("x0.csv");
    std::fs::write(&x0, "25\n75\n85\n").unwrap();
    let out = opinion(&["analyze", "--system", system.to_str().unwrap(), "--x0", x0.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["classification"], "consensus");
    assert!((v["alpha"].as_f64().unwrap() - 11.25).abs() < 1e-9);
}

#[test]
fn analyze_multi_issue_reports_verdict() {
    let v = json(&opinion(&["analyze", "--fixture", "sec5-antag"]));
    assert_eq!(v["multi_issue"]["verdict"], "convergent");
}

#[test]
fn samplebound_prints_m_and_tail() {
    let out = opinion(&["samplebound", "--agents", "2", "--eps", "0.1", "--beta", "0.01"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("m = "), "{text}");
    assert!(text.contains("tail = "));
    let one = stdout(&opinion(&["samplebound", "--dim", "1", "--eps", "0.1", "--beta", "0.01"]));
    assert!(one.starts_with("m = 44\n"), "{one}");
}

#[test]
fn missing_file_exits_2_with_path() {
    let out = opinion(&["analyze", "--system", "/nonexistent/system.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/system.json"));
}

#[test]
fn malformed_csv_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "1,-1\n-1,x\n").unwrap();
    let out = opinion(&["stepsize", "--laplacian", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn no_spanning_tree_is_numerical_or_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("split.csv");
    std::fs::write(&path, "0,0\n0,0\n").unwrap();
    let out = opinion(&["stepsize", "--laplacian", path.to_str().unwrap()]);
    assert!(matches!(out.status.code(), Some(2) | Some(3)));
}

#[test]
fn simulate_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = opinion(&["simulate", "--fixture", "example1", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(json(&out)["stop_reason"], "converged");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("k,xi_1,xi_2,xi_3,spread\n"));
}

#[test]
fn stepsize_methods_agree_on_pair() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.csv");
    std::fs::write(&path, "1,-1\n-1,1\n").unwrap();
    let p = path.to_str().unwrap();
    let end = |method: &str| {
        let v = json(&opinion(&["stepsize", "--laplacian", p, "--method", method]));
        v["region"]["intervals"][0][1].as_f64().unwrap()
    };
    assert!((end("direct") - 0.5).abs() < 1e-6);
    assert!((end("cubic") - 0.5).abs() < 1e-9);
    assert!((end("hb") - 0.5).abs() < 1e-6);
    let fixed = json(&opinion(&["stepsize", "--laplacian", p, "--mode", "fixed-eps", "--eps", "0.1", "--method", "corollary1"]));
    assert!(fixed["region"]["intervals"][0][1].as_f64().unwrap() > 0.0);
    let needs_eps = opinion(&["stepsize", "--laplacian", p, "--mode", "fixed-eps"]);
    assert_eq!(needs_eps.status.code(), Some(2));
}

#[test]
fn estimate_is_deterministic() {
    let run = || stdout(&opinion(&["estimate", "--fixture", "sec5-coop-issue-free", "--seed", "7"]));
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!(v["gamma_star"].as_f64().unwrap() < 1e-16);
    let alg = json(&opinion(&["estimate", "--fixture", "sec5-coop-issue-free", "--samples", "1", "--gamma0", "1e-12"]));
    assert_eq!(alg["m"], 1);
}

#[test]
fn reproduce_writes_identical_artifacts() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&d1, &d2] {
        let out = opinion(&["--out-dir", d.path().to_str().unwrap(), "reproduce", "all"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(!stdout(&out).contains("[unexpected]"));
    }
    for name in ["fig2a-trajectory.csv", "fig6-trajectory.csv", "example-estimation-d_hat.csv"] {
        assert_eq!(std::fs::read(d1.path().join(name)).unwrap(), std::fs::read(d2.path().join(name)).unwrap());
    }
}

#[test]
fn unknown_experiment_exits_2() {
    assert_eq!(opinion(&["reproduce", "fig9"]).status.code(), Some(2));
}
