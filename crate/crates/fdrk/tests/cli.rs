use std::path::Path;
use std::process::{Command, Output};

fn fdrk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdrk"))
        .args(args)
        .output()
        .expect("run fdrk")
}

fn ok(args: &[&str]) -> String {
    let out = fdrk(args);
    assert!(
        out.status.success(),
        "fdrk {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn solve_writes_snapshots_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let report = ok(&[
        "solve", "--model", "fisher", "--h", "0.05", "--alpha", "0.75", "--probes", "0.1,0.3,0.5,0.7",
        "--out", out,
    ]);
    assert!(report.contains("K_hat"));
    assert_eq!(header(&dir.path().join("solution.csv")), "x,t,u_numeric,u_exact");
    assert_eq!(header(&dir.path().join("diagnostics.csv")), "t,tau_inf,eta_inf,E_inf");
    let text = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let last = text.lines().last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cols[0], 0.7);
    assert_eq!(cols[1], 1.0);
    assert!((cols[2] - cols[3]).abs() < 1e-3);
}

#[test]
fn zero_horizon_returns_the_initial_condition() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["solve", "--tau", "0", "--h", "0.1", "--out", dir.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[1], 0.0);
        assert_eq!(cols[2], cols[3]);
    }
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn solve_accepts_a_fixed_time_step() {
    let dir = tempfile::tempdir().unwrap();
    let report = ok(&[
        "solve", "--h", "0.0125", "--fixed-k", "0.0001", "--tau", "0.01", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(report.contains("steps = 100"), "{report}");
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = d.path().to_str().unwrap();
        ok(&["solve", "--model", "burgers-fisher", "--h", "0.05", "--out", out]);
        ok(&[
            "infer", "--model", "fisher", "--seed", "4", "--chain-length", "30", "--burn-in", "10",
            "--h0", "0.1", "--out", out,
        ]);
    }
    for f in ["solution.csv", "diagnostics.csv", "chain.csv", "trace.csv", "summary.json", "data.csv"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
}

#[test]
fn infer_output_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "infer", "--model", "burgers-fisher", "--seed", "1", "--chain-length", "1", "--burn-in", "0",
        "--exact-fm", "--out", out,
    ]);
    assert_eq!(
        header(&dir.path().join("chain.csv")),
        "iter,theta_1,theta_2,logpost,accepted,h_used,K_hat"
    );
    assert_eq!(header(&dir.path().join("trace.csv")), "iter,event,h_before,h_after,K_hat,B");
    assert_eq!(header(&dir.path().join("data.csv")), "x,y,u_exact");
    let chain = std::fs::read_to_string(dir.path().join("chain.csv")).unwrap();
    assert_eq!(chain.lines().count(), 2);
    let summary: serde_json::Value =
        serde_json::from_slice(&read(&dir.path().join("summary.json"))).unwrap();
    assert_eq!(summary["forward_map"], "exact");
    assert_eq!(summary["params"][1]["name"], "s");
    let b = summary["B"].as_f64().unwrap();
    assert!((b / 6e-4 - 1.0).abs() < 0.05);
}

#[test]
fn infer_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdrk(&["infer", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--seed"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "model = \"fitzhugh-nagumo\"\nseed = 7\nm = 3\nsigma = 0.01\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    ok(&[
        "simulate", "--config", cfg.to_str().unwrap(), "--m", "5", "--out", out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(out.join("data.csv")).unwrap();
    assert_eq!(text.lines().count(), 6);

    std::fs::write(&cfg, "modle = \"fisher\"\n").unwrap();
    let bad = fdrk(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    assert!(!bad.status.success());
}

#[test]
fn error_sweep_rows_dominate() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["error-sweep", "--model", "fisher", "--h-ladder", "0.05,0.025", "--out", dir.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(dir.path().join("error_sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "h,true_err_inf,K_hat");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[2] >= r[1]));

    let fine = tempfile::tempdir().unwrap();
    ok(&["error-sweep", "--h-ladder", "0.0125,0.00625", "--out", fine.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(fine.path().join("error_sweep.csv")).unwrap();
    let errs: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let ratio = errs[0] / errs[1];
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");

    let single = tempfile::tempdir().unwrap();
    ok(&["error-sweep", "--h-ladder", "0.05", "--out", single.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(single.path().join("error_sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn order_table_header_and_degenerate_request() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["order", "--model", "fitzhugh-nagumo", "--h-ladder", "0.05", "--out", dir.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(dir.path().join("order.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "h,N,fitzhugh-nagumo");
    let order: f64 = text.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((order - 2.0).abs() < 0.05, "{order}");

    let bad = tempfile::tempdir().unwrap();
    let out = fdrk(&["order", "--h-ladder", "0.25", "--out", bad.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!bad.path().join("order.csv").exists());
}

#[test]
fn unknown_names_fail_with_one_line() {
    for args in [
        vec!["solve", "--model", "heat"],
        vec!["solve", "--te-policy", "magic"],
        vec!["solve", "--params", "q=1"],
    ] {
        let out = fdrk(&args);
        assert!(!out.status.success(), "{args:?}");
        assert_eq!(String::from_utf8_lossy(&out.stderr).trim().lines().count(), 1);
    }
}
