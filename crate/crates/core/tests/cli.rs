use std::fs;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttsurrogate"))
        .args(args)
        .output()
        .unwrap()
}

const SMALL: &[&str] = &[
    "run",
    "--benchmark",
    "rastrigin",
    "--dim",
    "3",
    "--grid",
    "5",
    "--rank",
    "3",
    "--sweeps",
    "4",
    "--train",
    "300",
    "--test",
    "200",
    "--repeats",
    "2",
    "--seed",
    "11",
];

#[test]
fn list_benchmarks_prints_registry() {
    let out = cli(&["list-benchmarks"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 14);
    assert!(text.contains("piston\t7\t[30, 60] x"));
    assert!(text.contains("pde-voi\t9\t[0.01, 1]"));
}

#[test]
fn run_is_reproducible_and_writes_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let mut args = SMALL.to_vec();
        args.extend(["--format", "csv", "--out", p.to_str().unwrap()]);
        let out = cli(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let report = fs::read(&a).unwrap();
    assert_eq!(report, fs::read(&b).unwrap());
    let text = String::from_utf8(report).unwrap();
    let methods: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(methods, ["ANOVA", "ALS", "ANOVA-ALS"]);

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap())
            .unwrap();
    let run = &meta["runs"][0];
    assert_eq!(run["metadata"]["spec"]["seed"], 11);
    assert_eq!(
        run["metadata"]["seeds"]["random_init"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
    assert_eq!(run["metadata"]["train_hash"].as_str().unwrap().len(), 64);
    assert!(run["metadata"]["wall_times"].is_array());
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    fs::write(&cfg, r#"{"benchmark":"dixon","dim":3,"grid":4,"rank":2,"sweeps":2,"train":100,"test":50,"repeats":1}"#).unwrap();
    let out = cli(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--init",
        "anova",
        "--format",
        "markdown",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("| Dixon | Train |"));
    assert!(text.lines().nth(2).unwrap().contains(" - |"));
}

#[test]
fn saved_model_evaluates_in_another_process() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let data = dir.path().join("test.csv");
    let mut args = SMALL.to_vec();
    args.extend([
        "--format",
        "csv",
        "--save-model",
        model.to_str().unwrap(),
        "--save-test",
        data.to_str().unwrap(),
    ]);
    let out = cli(&args);
    assert!(out.status.success());
    let report = String::from_utf8(out.stdout).unwrap();
    let full: f64 = report
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(5)
        .unwrap()
        .parse()
        .unwrap();

    let out = cli(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let err: f64 = String::from_utf8(out.stdout)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert_eq!(err, full);
}

#[test]
fn errors_exit_nonzero() {
    for args in [
        &["run", "--benchmark", "nope"][..],
        &["run", "--benchmark", "ackley", "--sweeps", "0"],
        &["run", "--benchmark", "ackley", "--train", "5"],
        &["run", "--config", "/nonexistent/spec.json"],
        &[
            "eval",
            "--model",
            "/nonexistent.json",
            "--data",
            "/nonexistent.csv",
        ],
    ] {
        let out = cli(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}
