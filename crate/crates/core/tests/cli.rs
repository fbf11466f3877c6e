use std::path::Path;
use std::process::{Command, Output};

fn fsvm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsvm"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

const CONFIG: &str = r#"
[dataset]
path = "train.csv"
format = "csv_rows"

[grid]
c_grid = [0.1, 1.0, 10.0]

[[grid.blocks]]
projection = { family = "fourier" }
dimensions = [1, 2, 3, 4, 5, 6]
kernels = [{ kind = "gaussian", sigma = 1.0 }, { kind = "gaussian", sigma = 10.0 }]
"#;

#[test]
fn synth_select_predict_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (file, seed) in [("train.csv", "1"), ("test.csv", "2")] {
        let out = fsvm(d, &["synth", "--n", "120", "--grid-len", "32", "--noise", "0.3", "--seed", seed, "--file", file]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    std::fs::write(d.join("run.toml"), CONFIG).unwrap();

    let out = fsvm(d, &["select", "--config", "run.toml", "--seed", "3", "--out", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["model.fsvm", "select.jsonl", "select.txt", "select.meta.json"] {
        assert!(d.join("out").join(f).is_file(), "missing {f}");
    }
    let first = std::fs::read_to_string(d.join("out/select.jsonl")).unwrap();
    assert!(first.starts_with("{\"record\":\"selection\""));
    assert_eq!(first.lines().count(), 1 + 6 * 2 * 3);

    let out = fsvm(d, &["predict", "--model", "out/model.fsvm", "--data", "test.csv", "--out", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let predictions = std::fs::read_to_string(d.join("out/predictions.csv")).unwrap();
    assert_eq!(predictions.lines().count(), 121);
    let report = std::fs::read_to_string(d.join("out/predict.jsonl")).unwrap();
    let value: serde_json::Value = serde_json::from_str(report.trim()).unwrap();
    assert!(value["error"].as_f64().unwrap() < 0.1, "{report}");

    let out = fsvm(d, &["inspect", "out/model.fsvm"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("support vectors"));
}

#[test]
fn predict_on_a_foreign_grid_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(fsvm(d, &["synth", "--n", "40", "--grid-len", "16", "--file", "train.csv"]).status.success());
    assert!(fsvm(d, &["synth", "--n", "10", "--grid-len", "20", "--file", "other.csv"]).status.success());
    std::fs::write(d.join("run.toml"), CONFIG).unwrap();
    let out = fsvm(d, &["train", "--config", "run.toml", "--out", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = fsvm(d, &["predict", "--model", "out/model.fsvm", "--data", "other.csv", "--out", "out"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error["));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(fsvm(d, &["frobnicate"]).status.code(), Some(1));

    std::fs::write(d.join("empty.toml"), "[dataset]\npath = \"x.csv\"\nformat = \"csv_rows\"\n\n[grid]\nblocks = []\n").unwrap();
    let out = fsvm(d, &["select", "--config", "empty.toml"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_data_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    let out = fsvm(dir.path(), &["train", "--config", "run.toml", "--data", "nope.csv"]);
    assert_eq!(out.status.code(), Some(2));
}
