use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fb"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn fb")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn csv_lines(path: PathBuf) -> Vec<String> {
    std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .map(str::to_owned)
        .collect()
}

/// Temp dir holding `a.json`, an MCLT with the given `N`, `k = 3` and `k' = 7/4`.
fn mclt_dir(n: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = fb(dir.path(), &["gen", "mclt", "--N", n, "--k", "3", "--kp", "7/4", "-o", "a.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

#[test]
fn generated_mclt_is_invertible() {
    let dir = mclt_dir("8");
    let out = fb(dir.path(), &["check", "a.json"]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["invertible"], true);
    assert_eq!(report["verdict"], "invertible");
    assert_eq!(report["surviving_roots"].as_array().unwrap().len(), 0);
    assert_eq!(report["total_minors"], 3003);
}

#[test]
fn common_factor_bank_is_a_negative_verdict() {
    // Both filters share the factor 1 - 2 z^{-1}, i.e. a root at z = 2.
    let dir = tempfile::tempdir().unwrap();
    let bank = r#"{"type":"analysis","M":2,"N":1,"k":2,
        "filters":[[[1,0],[-2,0]],[[3,0],[-6,0]]]}"#;
    std::fs::write(dir.path().join("toy.json"), bank).unwrap();
    let out = fb(dir.path(), &["check", "toy.json"]);
    assert_eq!(code(&out), 2);
    let report = stdout_json(&out);
    assert_eq!(report["invertible"], false);
    let roots = report["surviving_roots"].as_array().unwrap();
    assert_eq!(roots.len(), 1);
    let root = &roots[0];
    let (re, im) = (root[0].as_f64().unwrap(), root[1].as_f64().unwrap());
    assert!((re - 2.0).abs() < 1e-9 && im.abs() < 1e-9, "{root}");
}

#[test]
fn malformed_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"type":"analysis","M":2}"#).unwrap();
    for args in [&["check", "bad.json"][..], &["check", "missing.json"], &["report", "bad.json", "-o", "r"]] {
        let out = fb(dir.path(), args);
        assert_eq!(code(&out), 1, "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    assert_eq!(code(&fb(dir.path(), &["no-such-command"])), 1);
    assert_eq!(code(&fb(dir.path(), &["gen", "mclt", "--N", "4", "--k", "2", "--kp", "1.3", "-o", "x.json"])), 1);
}

#[test]
fn invert_reports_minimal_order_and_roundtrips() {
    let dir = mclt_dir("8");
    let out = fb(dir.path(), &["invert", "a.json", "-o", "s.json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "(p1,p2)=(2,0)");
    let file: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(file["type"], "synthesis");
    assert_eq!(file["metadata"]["p1"], 2);
    assert!(file["metadata"]["residual"].as_f64().unwrap() < 1e-10);

    let args = ["roundtrip", "a.json", "s.json", "--trials", "3", "--len", "500", "--seed", "11"];
    let first = fb(dir.path(), &args);
    assert_eq!(code(&first), 0);
    let report = stdout_json(&first);
    assert_eq!(report["seed"], 11);
    assert!(report["max_error"].as_f64().unwrap() < 1e-12);
    let second = fb(dir.path(), &args);
    assert_eq!(first.stdout, second.stdout);

    let out = fb(dir.path(), &["invert", "a.json", "--hs", "-o", "hs.json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "(p1,p2)=(2,0)");
}

#[test]
fn perturbed_synthesis_fails_roundtrip() {
    let dir = mclt_dir("8");
    assert_eq!(code(&fb(dir.path(), &["invert", "a.json", "-o", "s.json"])), 0);
    let path = dir.path().join("s.json");
    let mut file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    file["filters"][0][5][0] = Value::from(file["filters"][0][5][0].as_f64().unwrap() + 1e-3);
    std::fs::write(dir.path().join("bad.json"), file.to_string()).unwrap();
    let out = fb(dir.path(), &["roundtrip", "a.json", "bad.json", "--trials", "2", "--len", "400"]);
    assert_eq!(code(&out), 2);
    assert_eq!(stdout_json(&out)["pass"], false);
}

#[test]
fn hs_flag_rejects_non_hermitian_bank() {
    let dir = tempfile::tempdir().unwrap();
    let bank = r#"{"type":"analysis","M":3,"N":2,"k":1,
        "filters":[[[1,0],[0,1]],[[0,0],[1,0]],[[1,1],[0,0]]]}"#;
    std::fs::write(dir.path().join("c.json"), bank).unwrap();
    assert_eq!(code(&fb(dir.path(), &["invert", "c.json", "-o", "s.json"])), 0);
    for args in [
        &["invert", "c.json", "--hs", "-o", "s.json"][..],
        &["optimize", "c.json", "--criterion", "time", "--hs", "-o", "o.json"],
    ] {
        let out = fb(dir.path(), args);
        assert_eq!(code(&out), 1);
        assert!(String::from_utf8_lossy(&out.stderr).contains("Hermitian"));
    }
}

#[test]
fn frequency_optimization_lowers_cost_and_keeps_symmetry() {
    let dir = mclt_dir("4");
    let out = fb(
        dir.path(),
        &["optimize", "a.json", "--criterion", "freq", "--hs", "--max-iter", "300", "-o", "o.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    let initial = summary["initial_cost"].as_f64().unwrap();
    let last = summary["final_cost"].as_f64().unwrap();
    assert!(last < initial, "{last} >= {initial}");
    assert_eq!(summary["order"], serde_json::json!([3, 0]));
    assert!(summary["hs_defect"].as_f64().unwrap() < 1e-12);

    let history = csv_lines(dir.path().join("o.history.csv"));
    assert_eq!(history[0], "iteration,cost,step,gradient_norm");
    assert_eq!(history.len() as u64, 2 + summary["iterations"].as_u64().unwrap());

    let dispersion = csv_lines(dir.path().join("o.dispersion.csv"));
    assert_eq!(dispersion.len(), 1 + 3 * 7);
    for stage in ["minimal_pi", "start", "optimized"] {
        assert_eq!(dispersion.iter().filter(|l| l.starts_with(&format!("{stage},"))).count(), 7);
    }

    let out = fb(dir.path(), &["roundtrip", "a.json", "o.json", "--trials", "2", "--len", "300"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn config_file_supplies_options_and_flags_win() {
    let dir = mclt_dir("4");
    std::fs::write(dir.path().join("cfg.json"), r#"{"criterion":"time","max_iter":5,"order":[2,0]}"#).unwrap();
    let out = fb(dir.path(), &["--config", "cfg.json", "optimize", "a.json", "-o", "o.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["criterion"], "time");
    assert_eq!(summary["order"], serde_json::json!([2, 0]));
    assert!(summary["iterations"].as_u64().unwrap() <= 5);

    let out = fb(dir.path(), &["--config", "cfg.json", "optimize", "a.json", "--max-iter", "7", "--order", "3,0", "-o", "o.json"]);
    let summary = stdout_json(&out);
    assert_eq!(summary["order"], serde_json::json!([3, 0]));
    assert!(summary["iterations"].as_u64().unwrap() <= 7);

    std::fs::write(dir.path().join("typo.json"), r#"{"critrion":"time"}"#).unwrap();
    assert_eq!(code(&fb(dir.path(), &["--config", "typo.json", "check", "a.json"])), 1);
}

#[test]
fn report_writes_requested_csvs() {
    let dir = mclt_dir("4");
    assert_eq!(code(&fb(dir.path(), &["invert", "a.json", "-o", "s.json"])), 0);
    let out = fb(dir.path(), &["report", "s.json", "--grid", "64", "-o", "rep"]);
    assert_eq!(code(&out), 0);
    // M = 7 channels of p N = 12 taps for the (2,0) inverse.
    let impulse = csv_lines(dir.path().join("rep.impulse.csv"));
    assert_eq!(impulse[0], "channel,m,re,im,modulus");
    assert_eq!(impulse.len(), 1 + 7 * 12);
    assert_eq!(csv_lines(dir.path().join("rep.freq.csv")).len(), 1 + 7 * 64);
    assert_eq!(csv_lines(dir.path().join("rep.dispersion.csv")).len(), 1 + 7);

    let out = fb(dir.path(), &["report", "a.json", "--freq", "--grid", "32", "-o", "an"]);
    assert_eq!(code(&out), 0);
    assert_eq!(csv_lines(dir.path().join("an.freq.csv")).len(), 1 + 7 * 32);
    assert!(!dir.path().join("an.impulse.csv").exists());
}
