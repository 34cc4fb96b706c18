//! End-to-end checks of the `dirsup` binary: output values, exit codes,
//! and byte-for-byte reproducibility of repeated runs.

use std::path::PathBuf;
use std::process::{Command, Output};

fn dirsup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirsup"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dirsup-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir.join(name)
}

#[test]
fn psi_exact_counts_the_sieve() {
    let out = dirsup(&["psi", "--n", "20", "--m", "3", "--exact"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "9");
}

#[test]
fn psi_default_is_the_dickman_approximation() {
    let out = dirsup(&["psi", "--n", "10000", "--m", "100"]);
    assert!(out.status.success());
    let v: f64 = stdout(&out).trim().parse().unwrap();
    // 10^4 rho(2) = 10^4 (1 - log 2).
    let want = 1e4 * (1.0 - 2.0f64.ln());
    assert!((v - want).abs() <= 1e-6 * want, "got {v}, expected near {want}");
}

#[test]
fn rho_below_one_is_exactly_one() {
    let out = dirsup(&["rho", "--u", "0.5"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "1.0");
}

#[test]
fn sieve_count_matches_known_pi() {
    let out = dirsup(&["sieve", "--limit", "2000", "--count"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "303");
}

#[test]
fn esup_repeats_byte_identically() {
    let args = [
        "esup", "--n", "100", "--tau", "6", "--sigma", "0.25", "--method", "torus-grid",
        "--budget", "256", "--replicates", "10", "--seed", "42",
    ];
    let a = dirsup(&args);
    let b = dirsup(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let line = stdout(&a);
    let record: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(record["sandwich_violations"], 0);
    assert_eq!(record["method"]["torus-grid"]["budget"], 256);
}

#[test]
fn usage_errors_exit_two() {
    // Unknown flag, missing required argument, unparsable value.
    for args in [
        vec!["psi", "--n", "20", "--m", "3", "--approximate"],
        vec!["psi", "--n", "20"],
        vec!["rho", "--u", "abc"],
    ] {
        let out = dirsup(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    // Semantic errors surface the same way: method/parameter mismatch and
    // impossible domains.
    for args in [
        vec!["esup", "--n", "50", "--tau", "4", "--method", "z-exact", "--budget", "9"],
        vec!["rho", "--u", "-1"],
        vec!["psi", "--n", "1", "--m", "3", "--exact"],
    ] {
        let out = dirsup(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn experiment_writes_rows_and_reruns_identically() {
    let config_path = scratch("sweep.json");
    let out_path = scratch("sweep.csv");
    let config = serde_json::json!({
        "n_grid": [50, 100],
        "tau_rule": [2, 4],
        "sigmas": [0.0],
        "method": {"name": "z-exact"},
        "replicates": 25,
        "seed": 3,
        "output": out_path,
        "format": "csv"
    });
    std::fs::write(&config_path, serde_json::to_vec(&config).unwrap()).unwrap();
    let run = dirsup(&["experiment", "--config", config_path.to_str().unwrap()]);
    assert!(run.status.success(), "stderr: {}", String::from_utf8_lossy(&run.stderr));
    let first = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = first.lines();
    assert!(lines.next().unwrap().starts_with("n,tau,sigma,method,"));
    assert_eq!(lines.count(), 4);

    let rerun = dirsup(&["experiment", "--config", config_path.to_str().unwrap()]);
    assert!(rerun.status.success());
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), first);
}

#[test]
fn experiment_streams_json_lines_to_stdout() {
    let config_path = scratch("stream.json");
    let config = serde_json::json!({
        "n_grid": [60],
        "tau_rule": "sqrt(N)",
        "sigmas": [0.0, 0.25],
        "method": {"name": "z-exact"},
        "replicates": 5,
        "seed": 1,
        "format": "json"
    });
    std::fs::write(&config_path, serde_json::to_vec(&config).unwrap()).unwrap();
    let run = dirsup(&["experiment", "--config", config_path.to_str().unwrap()]);
    assert!(run.status.success());
    let text = stdout(&run);
    let rows: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 2);
    // sqrt(60) rounds down to 7 cutoff primes.
    assert!(rows.iter().all(|r| r["n"] == 60 && r["tau"] == 7));
}

#[test]
fn malformed_configs_exit_two() {
    let cases = [
        ("missing.json", None),
        ("not-json.json", Some("{ this is not json")),
        ("bad-key.json", Some(r#"{"n_grid": [50], "tau_rule": [2], "sigmas": [0.0], "method": {"name": "z-exact"}, "replicates": 5, "seed": 1, "format": "json", "extra": true}"#)),
        ("bad-sigma.json", Some(r#"{"n_grid": [50], "tau_rule": [2], "sigmas": [0.7], "method": {"name": "z-exact"}, "replicates": 5, "seed": 1, "format": "json"}"#)),
        ("bad-rule.json", Some(r#"{"n_grid": [50], "tau_rule": "every", "sigmas": [0.0], "method": {"name": "z-exact"}, "replicates": 5, "seed": 1, "format": "json"}"#)),
    ];
    for (name, body) in cases {
        let path = scratch(name);
        if let Some(body) = body {
            std::fs::write(&path, body).unwrap();
        } else {
            let _ = std::fs::remove_file(&path);
        }
        let out = dirsup(&["experiment", "--config", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(!out.stderr.is_empty(), "{name} should explain itself");
    }
}
