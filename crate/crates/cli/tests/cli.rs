use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ftchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftchain"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn walk(dir: &Path, kind: &str, steps: &str) -> PathBuf {
    let path = dir.join(format!("{kind}.csv"));
    let out = ftchain(&[
        "simulate",
        "--kind",
        kind,
        "--steps",
        steps,
        "--seed",
        "1",
        "--trajectory",
        s(&path),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    path
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn gamma2_report_fields() {
    let dir = tempfile::tempdir().unwrap();
    let input = walk(dir.path(), "gaussian_walk", "50");
    let v = json(&ftchain(&[
        "gamma2",
        "--input",
        s(&input),
        "--rho",
        "0.25",
        "--seed",
        "7",
        "--iterations",
        "100",
    ]));
    for key in ["gamma2", "weights", "method", "n", "rho", "seed", "config"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["n"], 51);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["config"]["rho"], 0.25);
    assert_eq!(v["weights"].as_array().unwrap().len(), 51);
}

#[test]
fn gamma2_rho_from_loss_bound() {
    let dir = tempfile::tempdir().unwrap();
    let input = walk(dir.path(), "gaussian_walk", "20");
    let v = json(&ftchain(&[
        "gamma2",
        "--input",
        s(&input),
        "--loss-bound",
        "1",
        "--lipschitz",
        "4",
        "--iterations",
        "50",
    ]));
    assert_eq!(v["rho"], 0.25);
}

#[test]
fn analyze_bundles_every_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let input = walk(dir.path(), "beta_prime_walk", "500");
    let v = json(&ftchain(&[
        "analyze",
        "--input",
        s(&input),
        "--iterations",
        "200",
    ]));
    assert_eq!(v["points_total"], 501);
    assert_eq!(v["points_analyzed"], 200);
    for key in [
        "gamma2",
        "tail_fit",
        "ball_mass",
        "stable_index",
        "k_function",
    ] {
        assert!(v[key].get("error").is_none(), "{key}: {}", v[key]);
    }
    assert_eq!(v["config"]["rho"], 0.25);
    assert_eq!(v["config"]["block_size"], 10);
    assert_eq!(v["config"]["window_lo"], 0.01);
    assert_eq!(v["config"]["window_hi"], 0.2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = walk(dir.path(), "gaussian_walk", "20");
    assert_eq!(
        ftchain(&["gamma2", "--input", s(&input), "--nope"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(ftchain(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        ftchain(&["gamma2", "--input", s(&input), "--rho", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ftchain(&["bound", "--n", "10", "--delta", "1.5"])
            .status
            .code(),
        Some(2)
    );
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        ftchain(&["gamma2", "--input", s(&missing)]).status.code(),
        Some(1)
    );
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "1,2\n3\n").unwrap();
    let out = ftchain(&["kfunction", "--input", s(&ragged)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let flat = dir.path().join("flat.csv");
    std::fs::write(&flat, "0,0\n".repeat(80)).unwrap();
    assert_eq!(
        ftchain(&["tail-fit", "--input", s(&flat)]).status.code(),
        Some(1)
    );
}

#[test]
fn config_file_sits_under_explicit_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# bound defaults\nn = 100\ndelta = 0.3678794411714423\nk1 = 2\n",
    )
    .unwrap();
    let v = json(&ftchain(&["bound", "--config", s(&cfg)]));
    assert_eq!(v["config"]["k1"], 2.0);
    let w = json(&ftchain(&["bound", "--config", s(&cfg), "--k1", "1"]));
    assert_eq!(w["config"]["k1"], 1.0);
    assert!((w["high_prob_bound"].as_f64().unwrap() - 0.1).abs() < 1e-15);
}

#[test]
fn curves_are_two_column_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = walk(dir.path(), "gaussian_walk", "300");
    for (cmd, extra) in [
        ("ballmass", vec!["--rho", "1"]),
        ("kfunction", vec![]),
        ("cover", vec!["--rho", "2"]),
    ] {
        let curve = dir.path().join(format!("{cmd}.csv"));
        let mut args = vec![cmd, "--input", s(&input), "--curve", s(&curve)];
        args.extend(extra);
        json(&ftchain(&args));
        let text = std::fs::read_to_string(&curve).unwrap();
        assert!(text.lines().all(|l| l.split(',').count() == 2), "{cmd}");
        assert!(text.lines().count() > 10);
    }
}

#[test]
fn stable_index_blocks_are_one_based() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = ftchain(&[
        "simulate",
        "--kind",
        "stable_levy_walk",
        "--alpha",
        "1.2",
        "--dim",
        "3",
        "--steps",
        "2000",
        "--trajectory",
        s(&path),
    ]);
    assert!(out.status.success());
    let v = json(&ftchain(&[
        "stable-index",
        "--input",
        s(&path),
        "--blocks",
        "1-2,3",
    ]));
    assert_eq!(v["per_block"].as_array().unwrap().len(), 2);
    assert_eq!(
        ftchain(&["stable-index", "--input", s(&path), "--blocks", "1-2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ftchain(&["stable-index", "--input", s(&path), "--blocks", "0-2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn study_writes_named_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = ftchain(&[
        "study",
        "--name",
        "gaussian_dimension",
        "--replicates",
        "3",
        "--steps",
        "3000",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("gaussian_dimension.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v["study"], "gaussian_dimension");
    assert_eq!(v["spec"]["replicates"], 3);
    assert_eq!(v["config"]["name"], "gaussian_dimension");
    let csv = std::fs::read_to_string(dir.path().join("gaussian_dimension.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}
