//! Binary-level tests: exit codes, output structure, and bit determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

fn fairlin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairlin"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fairlin_cli_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn synth_writes_expected_rows_and_is_deterministic() {
    let a = tmp("synth_a.csv");
    let b = tmp("synth_b.csv");
    for out in [&a, &b] {
        let st = fairlin()
            .args(["synth", "--setting", "1", "--seed", "7", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(st.success());
    }
    let content = read(&a);
    assert_eq!(content, read(&b), "same args must give byte-identical files");
    let text = String::from_utf8(content).unwrap();
    assert_eq!(text.lines().count(), 10_001);
    assert_eq!(text.lines().next().unwrap(), "x1,x2,z,y");
}

#[test]
fn synth_rejects_unknown_setting() {
    let st = fairlin()
        .args(["synth", "--setting", "4", "--seed", "1", "--out"])
        .arg(tmp("bad.csv"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn eval_reproduces_figure1_and_validates_lengths() {
    let out = tmp("f1c1.json");
    let st = fairlin()
        .args(["eval", "--data"])
        .arg(fixture("figure1.csv"))
        .arg("--schema")
        .arg(fixture("figure1_schema.json"))
        .arg("--pred")
        .arg(fixture("figure1_c1_pred.csv"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let v: serde_json::Value = serde_json::from_slice(&read(&out)).unwrap();
    assert_eq!(v["fnr_z1"], 0.0);
    assert_eq!(v["fnr_z0"], 0.5);
    assert_eq!(v["pos_rate_z1"], 1.0);
    assert_eq!(v["d_impact"], 2.0 / 3.0 - 1.0);

    // mismatched row count: a 3-row prediction file against 6 rows
    let short = tmp("short_pred.csv");
    std::fs::write(&short, "pred\n1\n-1\n1\n").unwrap();
    let st = fairlin()
        .args(["eval", "--data"])
        .arg(fixture("figure1.csv"))
        .arg("--schema")
        .arg(fixture("figure1_schema.json"))
        .arg("--pred")
        .arg(&short)
        .arg("--out")
        .arg(tmp("never.json"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn train_outputs_have_documented_structure_and_are_deterministic() {
    let prefix_a = tmp("mini_a");
    let prefix_b = tmp("mini_b");
    for prefix in [&prefix_a, &prefix_b] {
        let st = fairlin()
            .args(["train", "--data"])
            .arg(fixture("compas_mini.csv"))
            .arg("--schema")
            .arg(fixture("compas_schema.json"))
            .args(["--mode", "constrained", "--kinds", "fpr,fnr", "--m", "0.5"])
            .args(["--splits", "2", "--seed", "3", "--out"])
            .arg(prefix)
            .status()
            .unwrap();
        assert!(st.success());
    }
    let model_a = read(&prefix_a.with_file_name("mini_a.model.json"));
    let model_b = read(&prefix_b.with_file_name("mini_b.model.json"));
    assert_eq!(model_a, model_b);
    let metrics_a = read(&prefix_a.with_file_name("mini_a.metrics.json"));
    assert_eq!(metrics_a, read(&prefix_b.with_file_name("mini_b.metrics.json")));

    let model: serde_json::Value = serde_json::from_slice(&model_a).unwrap();
    assert_eq!(model["mode"], "constrained");
    assert_eq!(model["kinds"], serde_json::json!(["fpr", "fnr"]));
    let splits = model["splits"].as_array().unwrap();
    assert_eq!(splits.len(), 2);
    assert_eq!(splits[0]["theta"].as_array().unwrap().len(), 11); // 10 features + intercept
    let report = &splits[0]["train_report"];
    assert_eq!(report["thresholds"].as_array().unwrap().len(), 2);
    assert!(report["trace"].as_array().is_some());

    let metrics: serde_json::Value = serde_json::from_slice(&metrics_a).unwrap();
    assert_eq!(metrics["splits"].as_array().unwrap().len(), 2);
    for key in ["accuracy", "d_fpr", "d_fnr", "fpr_z0", "pos_rate_z1"] {
        assert!(metrics["mean"].get(key).is_some(), "mean lacks {key}");
    }
}

#[test]
fn train_constrained_requires_exactly_one_threshold() {
    for extra in [vec![], vec!["--m", "0.5", "--c", "0.1"]] {
        let st = fairlin()
            .args(["train", "--data"])
            .arg(fixture("compas_mini.csv"))
            .arg("--schema")
            .arg(fixture("compas_schema.json"))
            .args(["--mode", "constrained", "--splits", "2"])
            .args(extra)
            .args(["--out"])
            .arg(tmp("never"))
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(2));
    }
}

#[test]
fn sweep_writes_table_and_rejects_bad_grid() {
    let out = tmp("sweep.csv");
    let st = fairlin()
        .args(["sweep", "--data"])
        .arg(fixture("compas_mini.csv"))
        .arg("--schema")
        .arg(fixture("compas_schema.json"))
        .args(["--kinds", "fpr", "--grid", "1.0,0.5", "--splits", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let text = String::from_utf8(read(&out)).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "m,split,accuracy,d_fpr,d_fnr,fpr_z0,fpr_z1,fnr_z0,fnr_z1,cov_omr,cov_fpr,cov_fnr"
    );
    // 2 grid points × 2 splits + 2 mean rows
    assert_eq!(text.lines().count(), 1 + 4 + 2);
    assert_eq!(text.lines().filter(|l| l.contains(",mean,")).count(), 2);

    let st = fairlin()
        .args(["sweep", "--data"])
        .arg(fixture("compas_mini.csv"))
        .arg("--schema")
        .arg(fixture("compas_schema.json"))
        .args(["--grid", "1.0,zap", "--splits", "2", "--out"])
        .arg(tmp("never.csv"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn single_point_sweep_matches_train_metrics() {
    let sweep_out = tmp("single_sweep.csv");
    let st = fairlin()
        .args(["sweep", "--data"])
        .arg(fixture("compas_mini.csv"))
        .arg("--schema")
        .arg(fixture("compas_schema.json"))
        .args(["--kinds", "fpr", "--grid", "0.5", "--splits", "2", "--seed", "4", "--out"])
        .arg(&sweep_out)
        .status()
        .unwrap();
    assert!(st.success());

    let train_prefix = tmp("single_train");
    let st = fairlin()
        .args(["train", "--data"])
        .arg(fixture("compas_mini.csv"))
        .arg("--schema")
        .arg(fixture("compas_schema.json"))
        .args(["--mode", "constrained", "--kinds", "fpr", "--m", "0.5"])
        .args(["--splits", "2", "--seed", "4", "--out"])
        .arg(&train_prefix)
        .status()
        .unwrap();
    assert!(st.success());

    let sweep_text = String::from_utf8(read(&sweep_out)).unwrap();
    let mean_row: Vec<&str> = sweep_text
        .lines()
        .find(|l| l.contains(",mean,"))
        .expect("mean row present")
        .split(',')
        .collect();
    let sweep_acc: f64 = mean_row[2].parse().unwrap();

    let metrics: serde_json::Value =
        serde_json::from_slice(&read(&train_prefix.with_file_name("single_train.metrics.json")))
            .unwrap();
    let train_acc = metrics["mean"]["accuracy"].as_f64().unwrap();
    assert_eq!(sweep_acc, train_acc, "identical protocol must give identical numbers");
}

#[test]
fn postprocess_and_baseline_modes_run_on_figure_scale_data() {
    // unconstrained smoke on the 6-row fixture: structure only
    let prefix = tmp("f1_unc");
    let st = fairlin()
        .args(["train", "--data"])
        .arg(fixture("figure1.csv"))
        .arg("--schema")
        .arg(fixture("figure1_schema.json"))
        .args(["--mode", "unconstrained", "--splits", "2", "--out"])
        .arg(&prefix)
        .status()
        .unwrap();
    assert!(st.success());
    let model: serde_json::Value =
        serde_json::from_slice(&read(&prefix.with_file_name("f1_unc.model.json"))).unwrap();
    assert!(model["splits"][0]["unconstrained"]["converged"].is_boolean());

    for (mode, extra) in [("baseline", vec!["--epsilon", "0.1"]), ("postprocess", vec![])] {
        let prefix = tmp(&format!("mini_{mode}"));
        let st = fairlin()
            .args(["train", "--data"])
            .arg(fixture("compas_mini.csv"))
            .arg("--schema")
            .arg(fixture("compas_schema.json"))
            .args(["--mode", mode, "--kinds", "fpr", "--splits", "2"])
            .args(extra)
            .args(["--out"])
            .arg(&prefix)
            .status()
            .unwrap();
        assert!(st.success(), "mode {mode}");
    }
}

#[test]
fn missing_column_is_a_config_error() {
    let bad = tmp("bad_schema.json");
    std::fs::write(
        &bad,
        r#"{
            "label_column": "nope", "positive_value": "1",
            "sensitive_column": "gender", "z0_value": "Female",
            "feature_columns": [{"name": "clothing_bulge", "kind": "numeric"}]
        }"#,
    )
    .unwrap();
    let st = fairlin()
        .args(["eval", "--data"])
        .arg(fixture("figure1.csv"))
        .arg("--schema")
        .arg(&bad)
        .arg("--pred")
        .arg(fixture("figure1_c1_pred.csv"))
        .arg("--out")
        .arg(tmp("never2.json"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}
