//! End-to-end runs of the `oneshot-ent` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use oneshot_ent::io;
use oneshot_ent::quantum;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oneshot-ent"))
        .current_dir(dir)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .args(args)
        .env_remove("ONESHOT_ENT_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn states(dir: &Path) {
    io::save_state(&dir.join("bell2.json"), "bell2", &quantum::max_entangled(2).unwrap()).unwrap();
    io::save_state(&dir.join("bell4.json"), "bell4", &quantum::max_entangled(4).unwrap()).unwrap();
    io::save_state(&dir.join("sep.json"), "sep", &quantum::basis_state(vec![2, 2], 1).unwrap()).unwrap();
}

#[test]
fn measure_examples() {
    let dir = tempfile::tempdir().unwrap();
    states(dir.path());

    let out = run(dir.path(), &["measure", "--state", "bell2.json", "--measure", "emax"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["value_lower"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((v["value_upper"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(v["exact"], Value::Bool(true));
    assert!(dir.path().join("out/measure-bell2-emax.json").exists());

    let out = run(dir.path(), &["measure", "--state", "sep.json", "--measure", "emin"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_json(&out)["value_upper"].as_f64().unwrap().abs() < 1e-6);

    let plain = stdout_json(&run(dir.path(), &["measure", "--state", "bell2.json", "--measure", "emin"]));
    let smooth = stdout_json(&run(dir.path(), &["measure", "--state", "bell2.json", "--measure", "emin-smooth", "--eps", "0.0"]));
    assert_eq!(plain["value_lower"], smooth["value_lower"]);
    assert_eq!(plain["value_upper"], smooth["value_upper"]);
}

#[test]
fn protocol_examples() {
    let dir = tempfile::tempdir().unwrap();
    states(dir.path());

    let out = run(dir.path(), &["protocol", "distill", "--state", "bell4.json", "--eps", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["log_m"].as_f64(), Some(2.0));
    assert!((v["achieved_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(dir.path().join("out/distill-bell4.outcome.json").exists());
    let channel = io::load_channel(&dir.path().join("out/distill-bell4.channel.json")).unwrap();
    assert_eq!(channel.branches.len(), 2);

    let out = run(dir.path(), &["protocol", "catalytic-dilute", "--state", "bell2.json", "--eps", "0.01", "--delta", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["catalyst_k"].as_u64(), Some(2));

    let out = run(dir.path(), &["protocol", "dilute", "--state", "sep.json", "--eps", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["log_m"].as_f64(), Some(0.0));
}

#[test]
fn regularize_example() {
    let dir = tempfile::tempdir().unwrap();
    states(dir.path());
    let out = run(dir.path(), &["experiments", "regularize", "--state", "bell2.json", "--nmax", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("out/regularize.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    for entry in stdout_json(&out)[0]["entries"].as_array().unwrap() {
        assert!((entry["lower"].as_f64().unwrap() - 1.0).abs() < 0.02);
    }
}

#[test]
fn theorem_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"battery": ["mes-2", "iso2-0.90", "werner2-0.75"], "eps": [0.0, 0.1]}"#).unwrap();
    let mut reports = Vec::new();
    for _ in 0..2 {
        let out = run(dir.path(), &["--config", config.to_str().unwrap(), "experiments", "theorems"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stdout_json(&out)["failed"].as_u64(), Some(0));
        reports.push(std::fs::read(dir.path().join("out/theorems.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    states(dir.path());

    let config = dir.path().join("empty.json");
    std::fs::write(&config, r#"{"battery": []}"#).unwrap();
    let out = run(dir.path(), &["--config", config.to_str().unwrap(), "experiments", "theorems"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(dir.path(), &["measure", "--state", "bell2.json", "--measure", "nope"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(dir.path(), &["measure", "--state", "bell2.json", "--measure", "emax-smooth"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(dir.path().join("bad.json"), r#"{"name": "bad", "dims": [2], "matrix": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]}"#).unwrap();
    let out = run(dir.path(), &["measure", "--state", "bad.json", "--measure", "emax"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(dir.path(), &["measure", "--state", "bell2.json", "--measure", "emax", "--max-width=-1"]);
    assert_eq!(out.status.code(), Some(4));
}
