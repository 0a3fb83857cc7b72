//! End-to-end tests of the `wbsl` binary: reproducibility of runs, override
//! precedence, validation failing before any work starts, and output shapes.

use std::path::Path;
use std::process::Command;

fn wbsl() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wbsl"));
    // Make failures terse in test logs.
    cmd.env("RUST_BACKTRACE", "0");
    cmd.env_remove("WBSL_SEED");
    cmd.env_remove("WBSL_OUT");
    cmd
}

fn small_config(dir: &Path, whitening: &str, gamma: f64) -> std::path::PathBuf {
    let out_dir = dir.join("out");
    let config = serde_json::json!({
        "model": { "name": "ma2", "t0": 10 },
        "observed": { "kind": "synthetic", "theta_true": [0.6, 0.2], "seed": 7 },
        "whitening": whitening,
        "shrinkage": { "kind": "warton", "gamma": gamma },
        "n": 20,
        "n_cov": 200,
        "iterations": 60,
        "burn_in": 10,
        "theta0": [0.6, 0.2],
        "proposal_cov": [[0.01, 0.0], [0.0, 0.01]],
        "seed": 99,
        "out_dir": out_dir,
        "tuning": {
            "target": [1.2, 1.8],
            "replicates": 8,
            "reductions": [0.5],
            "include_gamma0": true,
            "cap": 4000
        }
    });
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&config).unwrap()).unwrap();
    path
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

#[test]
fn rerun_with_same_seed_and_more_threads_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "pca", 0.0);

    let out1 = dir.path().join("run1");
    let out8 = dir.path().join("run8");
    for (out, threads) in [(&out1, "1"), (&out8, "8")] {
        let status = wbsl()
            .args(["--config", config.to_str().unwrap()])
            .args(["--out", out.to_str().unwrap()])
            .args(["--threads", threads])
            .arg("sample")
            .status()
            .unwrap();
        assert!(status.success());
    }

    assert_eq!(read(&out1.join("chain.csv")), read(&out8.join("chain.csv")));
    assert_eq!(
        read(&out1.join("whitening.json")),
        read(&out8.join("whitening.json"))
    );
}

#[test]
fn seed_precedence_is_flag_then_env_then_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "pca", 0.0);

    let seed_of = |out: &Path| -> u64 {
        let meta: serde_json::Value =
            serde_json::from_slice(&read(&out.join("metadata.json"))).unwrap();
        meta["seed"].as_u64().unwrap()
    };

    let from_file = dir.path().join("from_file");
    let status = wbsl()
        .args(["--config", config.to_str().unwrap()])
        .args(["--out", from_file.to_str().unwrap()])
        .arg("sample")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(seed_of(&from_file), 99);

    let from_env = dir.path().join("from_env");
    let status = wbsl()
        .env("WBSL_SEED", "123")
        .args(["--config", config.to_str().unwrap()])
        .args(["--out", from_env.to_str().unwrap()])
        .arg("sample")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(seed_of(&from_env), 123);

    let from_flag = dir.path().join("from_flag");
    let status = wbsl()
        .env("WBSL_SEED", "123")
        .args(["--config", config.to_str().unwrap()])
        .args(["--seed", "7"])
        .args(["--out", from_flag.to_str().unwrap()])
        .arg("sample")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(seed_of(&from_flag), 7);

    // Different seeds must actually change the chain.
    assert_ne!(
        read(&from_file.join("chain.csv")),
        read(&from_env.join("chain.csv"))
    );
}

#[test]
fn missing_observed_file_fails_before_writing_anything() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let config = serde_json::json!({
        "model": { "name": "ma2", "t0": 10 },
        "observed": { "kind": "file", "path": dir.path().join("nope.csv") },
        "whitening": "pca",
        "shrinkage": { "kind": "warton", "gamma": 0.0 },
        "n": 20,
        "n_cov": 200,
        "iterations": 60,
        "burn_in": 10,
        "theta0": [0.6, 0.2],
        "proposal_cov": [[0.01, 0.0], [0.0, 0.01]],
        "seed": 99,
        "out_dir": out_dir
    });
    let path = dir.path().join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&config).unwrap()).unwrap();

    let output = wbsl()
        .args(["--config", path.to_str().unwrap()])
        .arg("sample")
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("cannot load observed data"),
        "unexpected stderr: {stderr}"
    );
    assert!(!out_dir.exists(), "no output should be written on bad config");
}

#[test]
fn whitening_none_runs_and_records_method_none() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "none", 1.0);
    let out = dir.path().join("plain");

    let status = wbsl()
        .args(["--config", config.to_str().unwrap()])
        .args(["--out", out.to_str().unwrap()])
        .arg("sample")
        .status()
        .unwrap();
    assert!(status.success());

    let meta: serde_json::Value =
        serde_json::from_slice(&read(&out.join("metadata.json"))).unwrap();
    assert_eq!(meta["whitening_method"], "none");
    assert!(meta.get("whitening_file").is_none());
    assert!(!out.join("whitening.json").exists());
    assert!(out.join("chain.csv").exists());
}

#[test]
fn tune_emits_well_formed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "pca", 0.0);
    let out = dir.path().join("tuned");

    let status = wbsl()
        .args(["--config", config.to_str().unwrap()])
        .args(["--out", out.to_str().unwrap()])
        .arg("tune")
        .status()
        .unwrap();
    assert!(status.success());

    let text = String::from_utf8(read(&out.join("tuning.csv"))).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "label,n,gamma,sd,mean_loglik,at_floor"
    );
    let rows: Vec<&str> = lines.collect();
    // baseline + one reduction + gamma0.
    assert_eq!(rows.len(), 3);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 6);
        let n: usize = fields[1].parse().unwrap();
        let gamma: f64 = fields[2].parse().unwrap();
        let sd: f64 = fields[3].parse().unwrap();
        assert!(n >= 2);
        assert!((0.0..=1.0).contains(&gamma));
        assert!(sd.is_finite() && sd > 0.0);
    }
}
