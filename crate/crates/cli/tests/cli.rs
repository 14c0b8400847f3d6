//! End-to-end tests of the binary: flag handling, exit codes, CSV/JSON
//! schema stability, and determinism across repeated runs.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_onebit-put"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn table_ldp_sweep_roundtrips_through_a_parser() {
    let out = run(&["table", "--ldp", "--v", "4", "--eps", "0.1:4:0.1", "--delta", "0.05"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "v,eps,delta,gamma,zeta,put");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 40);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 6);
        let v: usize = cols[0].parse().unwrap();
        let eps: f64 = cols[1].parse().unwrap();
        let delta: f64 = cols[2].parse().unwrap();
        assert!(cols[3].is_empty(), "gamma must be empty on LDP rows");
        let zeta: f64 = cols[4].parse().unwrap();
        let put: f64 = cols[5].parse().unwrap();
        let expected_put = onebit_put::put_ldp(v, eps, delta).unwrap();
        let expected_zeta = onebit_put::zeta(v, delta).unwrap();
        assert!((put - expected_put).abs() <= 1e-11 * expected_put.max(1.0));
        assert!((zeta - expected_zeta).abs() <= 1e-11);
    }
}

#[test]
fn table_ml_log2_single_row() {
    let out = run(&["table", "--ml", "--v", "2", "--gamma", "log2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let cols: Vec<&str> = rows[0].split(',').collect();
    assert!(cols[1].is_empty() && cols[2].is_empty() && cols[4].is_empty());
    let put: f64 = cols[5].parse().unwrap();
    assert!((put - 0.5).abs() < 1e-11);
}

#[test]
fn table_rejects_gamma_above_log2_with_usage_exit() {
    let out = run(&["table", "--ml", "--v", "2", "--gamma", "0.8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn table_requires_a_constraint_family() {
    let out = run(&["table", "--v", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic_up_to_elapsed_time() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = run(&[
            "simulate",
            "--ldp",
            "--eps",
            "1",
            "--delta",
            "0.1",
            "--v",
            "4",
            "--n",
            "2000",
            "--trials",
            "50",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut ja: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    let mut jb: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&b).unwrap()).unwrap();
    for j in [&ja, &jb] {
        for key in ["config", "mean_n_mse", "stderr_n_mse", "put_reference", "ratio", "elapsed_s"]
        {
            assert!(j.get(key).is_some(), "missing key {key}");
        }
    }
    ja.as_object_mut().unwrap().remove("elapsed_s");
    jb.as_object_mut().unwrap().remove("elapsed_s");
    assert_eq!(ja, jb);
}

#[test]
fn simulate_thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, threads) in [(&a, "1"), (&b, "4")] {
        let out = run(&[
            "simulate", "--ml", "--gamma", "log2", "--v", "2", "--n", "1000", "--trials", "40",
            "--seed", "3", "--mode", "plain", "--threads", threads, "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let mut ja: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    let mut jb: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&b).unwrap()).unwrap();
    ja.as_object_mut().unwrap().remove("elapsed_s");
    jb.as_object_mut().unwrap().remove("elapsed_s");
    assert_eq!(ja, jb);
}

#[test]
fn simulate_mean_tracks_the_trade_off_constant() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = run(&[
        "simulate", "--ldp", "--eps", "1", "--delta", "0.1", "--v", "4", "--n", "20000",
        "--trials", "200", "--seed", "7", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let j: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let mean = j["mean_n_mse"].as_f64().unwrap();
    let stderr = j["stderr_n_mse"].as_f64().unwrap();
    let put = j["put_reference"].as_f64().unwrap();
    assert!((mean - put).abs() <= 3.0 * stderr);
    let ratio = j["ratio"].as_f64().unwrap();
    assert!((ratio - mean / put).abs() < 1e-12);
}

#[test]
fn simulate_plain_rejects_too_few_clients() {
    let out = run(&[
        "simulate", "--ldp", "--eps", "1", "--delta", "0", "--v", "4", "--mode", "plain",
        "--n", "2", "--trials", "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("n > u_count"), "{err}");
}

#[test]
fn simulate_writes_per_trial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trials.csv");
    let out = run(&[
        "simulate", "--ml", "--gamma", "0.4", "--v", "3", "--n", "500", "--trials", "20",
        "--seed", "1", "--out", dir.path().join("r.json").to_str().unwrap(),
        "--per-trial-csv", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "trial,mse,n_mse");
    assert_eq!(lines.count(), 20);
}

#[test]
fn scheme_export_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "scheme", "--ldp", "--eps", "1", "--delta", "0.1", "--v", "4", "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let descriptor: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("scheme.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(descriptor["case"], "even_cbd");
    assert_eq!(descriptor["u_count"], 3);
    let c1 = descriptor["c1"].as_str().unwrap();
    assert!(c1.contains('/'), "c1 must be a p/q string, got {c1}");
    for k in 1..=3 {
        let text =
            std::fs::read_to_string(dir.path().join(format!("mechanism_u{k}.csv"))).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 4);
        for row in rows {
            let cells: Vec<&str> = row.split(',').collect();
            assert_eq!(cells.len(), 2);
            for cell in cells {
                let (p, q) = cell.split_once('/').expect("p/q cell");
                p.parse::<i128>().or_else(|_| p.parse::<i64>().map(i128::from)).ok();
                assert!(!p.is_empty() && !q.is_empty());
            }
        }
    }
    // the design behind the even case is exported as a 1-based edge list
    let design = std::fs::read_to_string(dir.path().join("design.txt")).unwrap();
    assert_eq!(design.lines().count(), 6);
    assert_eq!(design.lines().next().unwrap(), "1 2");
}

#[test]
fn verify_example_scope_passes() {
    let out = run(&["verify", "--example1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = stdout(&out);
    assert!(text.contains("PASS"));
    assert!(text.contains("example reproduction"));
}
