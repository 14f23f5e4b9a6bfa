use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bns(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bns"))
        .current_dir(dir)
        .env_remove("BNS_SEED")
        .args(args)
        .output()
        .unwrap()
}

fn small(args: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    v.extend(
        [
            "--set",
            "simulate.n_paths=200",
            "--set",
            "simulate.write_paths=2",
            "--set",
            "simulate.n_steps=20",
            "--set",
            "hedge.n_paths=200",
            "--set",
            "hedge.n_steps=10",
            "--set",
            "price.n_paths=2000",
            "--set",
            "price.n_steps=20",
            "--set",
            "experiment_hedge.n_paths=200",
        ]
        .map(String::from),
    );
    v
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let a = small(args);
    bns(dir, &a.iter().map(String::as_str).collect::<Vec<_>>())
}

fn json(path: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_files_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(dir.path(), &["simulate", "--out", "a"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(dir.path(), &["simulate", "--out", "b"]);
    for f in ["ensemble.json", "paths/path_0000.csv", "paths/path_0001.csv"] {
        let fa = fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(fa, fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    let header = fs::read_to_string(dir.path().join("a/paths/path_0000.csv")).unwrap();
    assert!(header.starts_with("t,s,x,sigma_sq,v\n"));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn nonpositive_lambda_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["simulate", "--set", "model.lambda=-1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.lambda"));
}

#[test]
fn parse_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\"model\": {\"rho\": }").unwrap();
    assert_eq!(bns(dir.path(), &["price", "--config", "bad.json"]).status.code(), Some(2));
    fs::write(dir.path().join("unknown.json"), "{\"colour\": 1}").unwrap();
    assert_eq!(bns(dir.path(), &["price", "--config", "unknown.json"]).status.code(), Some(2));
    assert_eq!(bns(dir.path(), &["price", "--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn missing_input_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bns(dir.path(), &["features", "--input", "nope.csv"]).status.code(), Some(4));
}

#[test]
fn price_reports_closed_form_and_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["price", "--mc", "--out", "o"]);
    assert!(out.status.success());
    let v = json(dir.path().join("o/price.json"));
    assert!(v["closed_form_price"].is_f64());
    assert!(v["monte_carlo"]["price"].is_f64());
    assert!(v["monte_carlo"]["std_error"].as_f64().unwrap() > 0.0);
    let stdout: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, v);
}

#[test]
fn hedge_reports_each_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["hedge", "--out", "o", "--set", "hedge.compare_thetas=[0.0,0.5]"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(dir.path().join("o/hedge.json"));
    let strategies = v["strategies"].as_array().unwrap();
    assert_eq!(strategies.len(), 4);
    for s in strategies {
        for key in ["mean", "variance", "std_error", "n_paths", "seed"] {
            assert!(!s[key].is_null(), "{key}");
        }
    }
    assert_eq!(v["comparison"]["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn features_on_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.csv"), "date,price\n2012-04-04,10.0\n2012-04-05,9.0\n2012-04-06,9.5\n").unwrap();
    let out = run(
        dir.path(),
        &[
            "features",
            "--input",
            "p.csv",
            "--out",
            "o",
            "--set",
            "experiment.approach=duration",
            "--set",
            "experiment.duration.window=1",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("o/dataset.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("origin_index,f1,theta"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn experiment_report_shape_and_train_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["experiment", "--out", "e"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("e/report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[0], "metric,LR,MLP");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 3));
    let summary = json(dir.path().join("e/summary.json"));
    assert_eq!(summary["test_rows"], 20);

    let f = run(dir.path(), &["features", "--out", "f"]);
    assert!(f.status.success());
    let t = run(dir.path(), &["train", "--dataset", "f/dataset.csv", "--out", "t"]);
    assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
    assert!(dir.path().join("t/models/lr.json").exists());
    assert_eq!(json(dir.path().join("t/summary.json"))["predicted_theta"], summary["predicted_theta"]);
}

#[test]
fn seed_priority_on_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), "{\"seed\": 5}").unwrap();
    let seed_of = |args: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_bns"));
        cmd.current_dir(dir.path()).env_remove("BNS_SEED");
        if let Some(e) = env {
            cmd.env("BNS_SEED", e);
        }
        let mut a = small(args);
        a.extend(["--set".into(), "price.monte_carlo=true".into()]);
        let out = cmd.args(&a).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["monte_carlo"]["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&["price", "--out", "o"], None), 42);
    assert_eq!(seed_of(&["price", "--out", "o"], Some("9")), 9);
    assert_eq!(seed_of(&["price", "--config", "c.json", "--out", "o"], Some("9")), 5);
    assert_eq!(seed_of(&["price", "--config", "c.json", "--seed", "7", "--out", "o"], Some("9")), 7);
}

#[test]
fn help_lists_every_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = bns(dir.path(), &["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--config", "--seed", "--set", "--threads", "--out"] {
        assert!(text.contains(flag), "{flag}");
    }
    for cmd in ["simulate", "price", "hedge", "features", "train", "experiment"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}

#[test]
fn threads_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let one = run(dir.path(), &["simulate", "--threads", "1", "--out", "a"]);
    let four = run(dir.path(), &["simulate", "--threads", "4", "--out", "b"]);
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}
