use std::path::Path;
use std::process::Command;

fn gradsq() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gradsq"));
    c.env_remove("GRADSQ_THREADS");
    c
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const GREEN: &str = r#"{
    "experiment": "green",
    "domain": {"shape": "unit_square", "d": 2},
    "eps": [0.25, 0.125],
    "points": [[0.5, 0.5], [0.25, 0.75]]
}"#;

#[test]
fn green_run_writes_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "green.json", GREEN);
    let out = dir.path().join("out");
    let status = gradsq()
        .args(["green", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "green");
    let csv = std::fs::read_to_string(out.join("solve.csv")).unwrap();
    assert!(csv.starts_with("eps,vertices,envelope,dense,max_residual,max_asymmetry\n"));
    assert!(out.join("values.csv").exists());
}

#[test]
fn tolerance_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = GREEN.replace(
        "\"eps\": [0.25, 0.125],",
        "\"eps\": [0.25, 0.125], \"tolerances\": {\"residual_tol\": -1.0},",
    );
    let cfg = write_config(dir.path(), "green.json", &body);
    let status = gradsq()
        .args(["green", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "green.json", GREEN);
    // subcommand does not match the config
    let status = gradsq().args(["chi", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let missing = gradsq()
        .args(["green", "--config"])
        .arg(dir.path().join("absent.json"))
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(1));
    let bad_threads = gradsq()
        .env("GRADSQ_THREADS", "many")
        .args(["green", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(bad_threads.code(), Some(1));
}

#[test]
fn kpoint_request() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "kpoint.json",
        r#"{
            "experiment": "kpoint",
            "domain": {"shape": "unit_square", "d": 2},
            "eps": [0.5],
            "request": {"points": [[1, 1], [1, 1]], "lattice": true, "mode": "moment", "side": "discrete"}
        }"#,
    );
    let out = dir.path().join("out");
    let status = gradsq()
        .args(["kpoint", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!((report["fitted"]["value"].as_f64().unwrap() - 8.0).abs() < 1e-12);
}

#[test]
fn sample_is_reproducible_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sample.json",
        r#"{
            "experiment": "sample",
            "domain": {"shape": "unit_square", "d": 2},
            "eps": [0.125],
            "functions": [{"kind": "bump", "center": [0.5, 0.5], "radius": 0.3}],
            "replicates": 400,
            "orders": [2],
            "seed": 5
        }"#,
    );
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let status = gradsq()
            .args(["sample", "--config"])
            .arg(&cfg)
            .args(["--seed", "11", "--threads", threads, "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.code() == Some(0) || status.code() == Some(2));
        (
            std::fs::read(out.join("report.json")).unwrap(),
            std::fs::read(out.join("replicates.csv")).unwrap(),
        )
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "2");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let report: serde_json::Value = serde_json::from_slice(&a.0).unwrap();
    assert_eq!(report["provenance"]["seed"], 11);
}
