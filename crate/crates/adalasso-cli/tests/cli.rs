//! End-to-end checks of the command line interface.

use std::path::Path;
use std::process::{Command, Output};

fn adalasso() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adalasso"))
}

fn write_csv(path: &Path, rows: &[&[f64]]) {
    let body: String = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(path, body + "\n").unwrap();
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

#[test]
fn solve_soft_thresholds_an_orthogonal_design() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("x.csv");
    let response = dir.path().join("y.csv");
    // Two orthogonal columns with squared norm 2n: X'X/n = 2I... keep it
    // simple instead: identity-like columns scaled so X'X/n = I.
    let s = 2.0f64.sqrt();
    write_csv(&design, &[&[s, 0.0], &[0.0, s], &[s, 0.0], &[0.0, s]]);
    // y = X·(1.0, 0.2) so X'y/n = (1.0, 0.2).
    write_csv(&response, &[&[s], &[0.2 * s], &[s], &[0.2 * s]]);

    let output = adalasso()
        .args(["solve", "--design"])
        .arg(&design)
        .arg("--response")
        .arg(&response)
        .args(["--lambda", "0.5"])
        .output()
        .unwrap();
    let json = stdout_json(&output);
    let beta = json["beta"].as_array().unwrap();
    assert!((beta[0].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(beta[1].as_f64().unwrap(), 0.0);
    assert_eq!(json["support"], serde_json::json!([0]));
    assert!(json["converged"].as_bool().unwrap());
    assert!(json["kkt_residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn adaptive_emits_the_full_trace() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("x.csv");
    let response = dir.path().join("y.csv");
    let s = 2.0f64.sqrt();
    write_csv(&design, &[&[s, 0.0], &[0.0, s], &[s, 0.0], &[0.0, s]]);
    write_csv(&response, &[&[5.0 * s], &[0.0], &[5.0 * s], &[0.0]]);

    let output = adalasso()
        .args(["adaptive", "--design"])
        .arg(&design)
        .arg("--response")
        .arg(&response)
        .args(["--sigma", "0.0", "--lambda-init", "0.5"])
        .output()
        .unwrap();
    let json = stdout_json(&output);
    assert_eq!(json["s_bar"], 1);
    assert_eq!(json["s_bar_set"], serde_json::json!([0]));
    let beta_init = json["beta_init"].as_array().unwrap();
    assert!((beta_init[0].as_f64().unwrap() - 4.5).abs() < 1e-8);
    // The zero coordinate is excluded: null weight in JSON.
    assert!(json["weights"][1].is_null());
    assert_eq!(json["final"]["support"], serde_json::json!([0]));
    assert!((json["final"]["beta"][0].as_f64().unwrap() - 5.0).abs() < 1e-8);
}

#[test]
fn check_reports_requested_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("x.csv");
    let support = dir.path().join("s.csv");
    let sigma = dir.path().join("sigma.csv");
    let s = 2.0f64.sqrt();
    write_csv(&design, &[&[s, 0.0], &[0.0, s], &[s, 0.0], &[0.0, s]]);
    std::fs::write(&support, "0\n").unwrap();
    write_csv(&sigma, &[&[1.0, 0.0], &[0.0, 1.0]]);

    let output = adalasso()
        .args(["check", "--design"])
        .arg(&design)
        .arg("--support")
        .arg(&support)
        .arg("--sigma-matrix")
        .arg(&sigma)
        .args(["--s", "1", "--budget", "4"])
        .output()
        .unwrap();
    let json = stdout_json(&output);
    assert!((json["lambda_min_s"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((json["k_est"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((json["r_n"]["r_n"].as_f64().unwrap()).abs() < 1e-9);
    assert_eq!(json["irrepresentable"]["holds"], serde_json::json!(true));
    assert_eq!(json["event_x"]["holds"], serde_json::json!(true));
}

#[test]
fn ggm_writes_dot_and_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let samples_path = dir.path().join("samples.csv");
    // Deterministic strongly coupled pair plus an independent column.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut state = 1234567u64;
    let mut next = || {
        // xorshift; light-weight deterministic noise for the test fixture
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state as f64 / u64::MAX as f64) - 0.5
    };
    for _ in 0..200 {
        let a = next() * 2.0;
        let c = next() * 2.0;
        rows.push(vec![a, 0.9 * a + 0.1 * next(), c]);
    }
    let body: String = rows
        .iter()
        .map(|r| format!("{},{},{}", r[0], r[1], r[2]))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&samples_path, body + "\n").unwrap();

    let dot_path = dir.path().join("graph.dot");
    let output = adalasso()
        .args(["ggm", "--samples"])
        .arg(&samples_path)
        .args(["--sigma", "0.1", "--rule", "both", "--dot"])
        .arg(&dot_path)
        .output()
        .unwrap();
    let json = stdout_json(&output);
    assert_eq!(json["and_edges"], serde_json::json!([[0, 1]]));
    assert_eq!(json["per_node_summaries"].as_array().unwrap().len(), 3);
    let dot = std::fs::read_to_string(&dot_path).unwrap();
    assert!(dot.contains("0 -- 1"));
    assert!(dot.starts_with("graph G {"));
}

fn simulate_config(seed: u64) -> serde_json::Value {
    serde_json::json!({
        "scenario": {
            "covariance": {"kind": "identity", "p": 8},
            "n": 40,
            "p": 8,
            "signal": {
                "s": 2,
                "beta_min": 1.5,
                "magnitude": "fixed",
                "sign_pattern": "random",
                "support_placement": "random"
            },
            "sigma_eps": 0.3
        },
        "methods": ["plain_lasso", "adaptive_lasso"],
        "replicates": 12,
        "master_seed": seed,
        "detail": true
    })
}

#[test]
fn simulate_reports_are_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, simulate_config(7).to_string()).unwrap();

    let mut reports = Vec::new();
    for jobs in ["1", "4"] {
        let out = dir.path().join(format!("out{jobs}"));
        let output = adalasso()
            .args(["simulate", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(&out)
            .args(["--jobs", jobs])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        reports.push(std::fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1], "reports differ across --jobs");
}

#[test]
fn simulate_seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, simulate_config(7).to_string()).unwrap();

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, seed) in [(&out_a, "7"), (&out_b, "8")] {
        let output = adalasso()
            .args(["simulate", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(out)
            .args(["--seed", seed])
            .output()
            .unwrap();
        assert!(output.status.success());
    }
    let a = std::fs::read(out_a.join("report.json")).unwrap();
    let b = std::fs::read(out_b.join("report.json")).unwrap();
    assert_ne!(a, b, "different seeds must give different reports");
}

#[test]
fn simulate_exports_datasets_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    let mut config = simulate_config(5);
    config["replicates"] = serde_json::json!(3);
    std::fs::write(&config_path, config.to_string()).unwrap();

    let data_dir = dir.path().join("data");
    let output = adalasso()
        .args(["simulate", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .arg("--export-data")
        .arg(&data_dir)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let design = std::fs::read_to_string(data_dir.join("design_0000.csv")).unwrap();
    assert_eq!(design.lines().count(), 40);
    assert_eq!(design.lines().next().unwrap().split(',').count(), 8);
    let beta = std::fs::read_to_string(data_dir.join("beta_0002.csv")).unwrap();
    let nonzero = beta
        .lines()
        .filter(|l| l.parse::<f64>().unwrap() != 0.0)
        .count();
    assert_eq!(nonzero, 2, "the generated signal has exactly s nonzeros");
}

#[test]
fn simulate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.json");
    std::fs::write(&config_path, "{not json").unwrap();
    let status = adalasso()
        .args(["simulate", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // A replicate-level failure in every replicate: negative penalty.
    let mut config = simulate_config(3);
    config["adaptive"] = serde_json::json!({"lambda_init": -1.0});
    config["methods"] = serde_json::json!(["plain_lasso"]);
    let config_path = dir.path().join("failing.json");
    std::fs::write(&config_path, config.to_string()).unwrap();
    let status = adalasso()
        .args(["simulate", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(dir.path().join("out2"))
        .args(["--max-fail-rate", "0.5"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}
