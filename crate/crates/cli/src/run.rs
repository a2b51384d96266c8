//! Command implementations: synth, train, sweep, eval.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use fairlin_core::baseline::train_baseline;
use fairlin_core::ccp::{sweep_thresholds, train_constrained, TrainReport};
use fairlin_core::constraints::{ConstraintSpec, MistreatmentKind, ThresholdSpec};
use fairlin_core::dataset::Dataset;
use fairlin_core::error::{Error, Result};
use fairlin_core::exec;
use fairlin_core::io::{load_csv, make_splits, write_csv, SchemaConfig, SplitPlan};
use fairlin_core::logistic::{sigmoid_scores, train_unconstrained};
use fairlin_core::metrics::{error_report, GroupErrorReport};
use fairlin_core::postprocess::{apply_group_thresholds, fit_group_thresholds, ThresholdRule};
use fairlin_core::synth::{generate_setting, SyntheticSetting};

use crate::config::FileConfig;
use crate::{SweepArgs, TrainArgs, TrainMode};

pub fn cmd_synth(setting: u8, seed: u64, out: &Path) -> Result<()> {
    let setting = SyntheticSetting::from_index(setting)?;
    let data = generate_setting(setting, seed)?;
    write_csv(out, &data)
}

/// A trained model for one split, with the mode-specific details.
#[derive(Debug, Serialize)]
struct ModelRecord {
    split: usize,
    theta: Vec<f64>,
    feature_names: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    train_report: Option<TrainReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unconstrained: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    postprocess_rule: Option<ThresholdRule>,
}

struct SplitOutcome {
    model: ModelRecord,
    metrics: GroupErrorReport,
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let l2 = args.l2.or(cfg.l2).unwrap_or(1e-6);
    let schema = SchemaConfig::from_json_file(&args.schema)?;
    let data = load_csv(&args.data, &schema)?;
    let plan = SplitPlan {
        repetitions: args.splits,
        train_fraction: args.train_frac,
        base_seed: args.seed,
    };
    let splits = make_splits(&data, &plan)?;
    let kinds = parse_kinds(args.kinds.as_deref().unwrap_or("fpr"))?;

    let threshold = match (&args.mode, args.m, args.c) {
        (TrainMode::Constrained, Some(_), Some(_)) => {
            return Err(Error::InvalidInput("--m and --c are mutually exclusive".into()))
        }
        (TrainMode::Constrained, None, None) => {
            return Err(Error::InvalidInput("constrained mode needs --m or --c".into()))
        }
        (_, Some(m), _) => Some(ThresholdSpec::Multiplier(m)),
        (_, _, Some(c)) => Some(ThresholdSpec::Absolute(c)),
        _ => None,
    };

    let jobs: Vec<usize> = (0..splits.len()).collect();
    let outcomes: Vec<Result<SplitOutcome>> = exec::ordered_map(jobs, |si| {
        let train = data.subset(&splits[si].0)?;
        let test = data.subset(&splits[si].1)?;
        run_split(args, &cfg, l2, &kinds, threshold, si, &train, &test)
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let models: Vec<&ModelRecord> = outcomes.iter().map(|o| &o.model).collect();
    let model_json = serde_json::to_string_pretty(&json!({
        "mode": mode_name(&args.mode),
        "kinds": kinds,
        "splits": models,
    }))
    .expect("model serialization");

    let per_split: Vec<serde_json::Value> = outcomes
        .iter()
        .enumerate()
        .map(|(si, o)| json!({ "split": si, "metrics": o.metrics.flat_json() }))
        .collect();
    let mean = mean_metrics(outcomes.iter().map(|o| &o.metrics));
    let metrics_json = serde_json::to_string_pretty(&json!({
        "splits": per_split,
        "mean": mean,
    }))
    .expect("metrics serialization");

    write_outputs(&args.out, &[("model.json", &model_json), ("metrics.json", &metrics_json)])
}

#[allow(clippy::too_many_arguments)]
fn run_split(
    args: &TrainArgs,
    cfg: &FileConfig,
    l2: f64,
    kinds: &[MistreatmentKind],
    threshold: Option<ThresholdSpec>,
    si: usize,
    train: &Dataset,
    test: &Dataset,
) -> Result<SplitOutcome> {
    let (model, boundary, pred) = match args.mode {
        TrainMode::Unconstrained => {
            let fit = train_unconstrained(train, l2, &cfg.solver_config())?;
            let details = json!({
                "iterations": fit.iterations,
                "grad_norm": fit.grad_norm,
                "converged": fit.converged,
            });
            let pred = fit.boundary.predict_all(test)?;
            (
                ModelRecord {
                    split: si,
                    theta: fit.boundary.theta().to_vec(),
                    feature_names: train.feature_names().to_vec(),
                    train_report: None,
                    unconstrained: Some(details),
                    postprocess_rule: None,
                },
                fit.boundary,
                pred,
            )
        }
        TrainMode::Constrained => {
            let spec = ConstraintSpec::new(
                kinds.iter().map(|&k| (k, threshold.expect("validated"))).collect(),
            )?;
            let report = train_constrained(train, &spec, l2, &cfg.ccp_config())?;
            let pred = report.boundary.predict_all(test)?;
            let boundary = report.boundary.clone();
            (
                ModelRecord {
                    split: si,
                    theta: boundary.theta().to_vec(),
                    feature_names: train.feature_names().to_vec(),
                    train_report: Some(report),
                    unconstrained: None,
                    postprocess_rule: None,
                },
                boundary,
                pred,
            )
        }
        TrainMode::Baseline => {
            let mut bcfg = cfg.baseline_config();
            if let Some(e) = args.epsilon {
                bcfg.epsilon = e;
            }
            if let Some(d) = args.delta {
                bcfg.delta = d;
            }
            let report = train_baseline(train, kinds, l2, &bcfg)?;
            let pred = report.boundary.predict_all(test)?;
            let boundary = report.boundary.clone();
            (
                ModelRecord {
                    split: si,
                    theta: boundary.theta().to_vec(),
                    feature_names: train.feature_names().to_vec(),
                    train_report: Some(report),
                    unconstrained: None,
                    postprocess_rule: None,
                },
                boundary,
                pred,
            )
        }
        TrainMode::Postprocess => {
            let mut epsilon = cfg.postprocess.epsilon.unwrap_or(0.01);
            if let Some(e) = args.epsilon {
                epsilon = e;
            }
            let allow_randomized = cfg.postprocess.allow_randomized.unwrap_or(true);
            let fit = train_unconstrained(train, l2, &cfg.solver_config())?;
            let train_scores = sigmoid_scores(&fit.boundary, train)?;
            let rule = fit_group_thresholds(
                &train_scores,
                train.labels(),
                train.sensitive(),
                kinds,
                epsilon,
                allow_randomized,
            )?;
            let test_scores = sigmoid_scores(&fit.boundary, test)?;
            // per-split stream of the run seed keeps mixtures reproducible
            let pred = apply_group_thresholds(
                &rule,
                &test_scores,
                test.sensitive(),
                args.seed + si as u64,
            )?;
            (
                ModelRecord {
                    split: si,
                    theta: fit.boundary.theta().to_vec(),
                    feature_names: train.feature_names().to_vec(),
                    train_report: None,
                    unconstrained: None,
                    postprocess_rule: Some(rule),
                },
                fit.boundary,
                pred,
            )
        }
    };
    drop(boundary);
    let metrics = error_report(test.labels(), &pred, test.sensitive())?;
    Ok(SplitOutcome { model, metrics })
}

fn mode_name(mode: &TrainMode) -> &'static str {
    match mode {
        TrainMode::Unconstrained => "unconstrained",
        TrainMode::Constrained => "constrained",
        TrainMode::Baseline => "baseline",
        TrainMode::Postprocess => "postprocess",
    }
}

pub fn parse_kinds(s: &str) -> Result<Vec<MistreatmentKind>> {
    let kinds: Vec<MistreatmentKind> = s.split(',').map(|p| p.parse()).collect::<Result<_>>()?;
    if kinds.is_empty() {
        return Err(Error::InvalidInput("at least one kind required".into()));
    }
    for (i, k) in kinds.iter().enumerate() {
        if kinds[..i].contains(k) {
            return Err(Error::InvalidInput(format!("kind {k} listed twice")));
        }
    }
    Ok(kinds)
}

/// Across-splits average of the rate/disparity keys; counts are summed.
fn mean_metrics<'a>(reports: impl Iterator<Item = &'a GroupErrorReport>) -> serde_json::Value {
    let reports: Vec<&GroupErrorReport> = reports.collect();
    let k = reports.len() as f64;
    let mean_opt = |f: &dyn Fn(&GroupErrorReport) -> Option<f64>| -> Option<f64> {
        let mut sum = 0.0;
        for r in &reports {
            sum += f(r)?;
        }
        Some(sum / k)
    };
    let mut obj = serde_json::Map::new();
    for z in 0..2usize {
        obj.insert(format!("n_z{z}"), reports.iter().map(|r| r.groups[z].n).sum::<usize>().into());
        for (key, f) in [
            (
                "omr",
                (&|r: &GroupErrorReport| r.groups[z].omr)
                    as &dyn Fn(&GroupErrorReport) -> Option<f64>,
            ),
            ("fpr", &|r| r.groups[z].fpr),
            ("fnr", &|r| r.groups[z].fnr),
            ("fdr", &|r| r.groups[z].fdr),
            ("for", &|r| r.groups[z].for_),
            ("pos_rate", &|r| r.groups[z].positive_rate),
        ] {
            obj.insert(format!("{key}_z{z}"), json!(mean_opt(&|r| f(r))));
        }
    }
    obj.insert("accuracy".into(), json!(reports.iter().map(|r| r.accuracy).sum::<f64>() / k));
    for (key, f) in [
        ("d_omr", (&|r: &GroupErrorReport| r.d_omr) as &dyn Fn(&GroupErrorReport) -> Option<f64>),
        ("d_fpr", &|r| r.d_fpr),
        ("d_fnr", &|r| r.d_fnr),
        ("d_fdr", &|r| r.d_fdr),
        ("d_for", &|r| r.d_for),
        ("d_impact", &|r| r.d_impact),
    ] {
        obj.insert(key.into(), json!(mean_opt(&|r| f(r))));
    }
    serde_json::Value::Object(obj)
}

/// Write every output or none: failures remove files already written.
fn write_outputs(prefix: &Path, files: &[(&str, &str)]) -> Result<()> {
    let paths: Vec<PathBuf> = files
        .iter()
        .map(|(suffix, _)| {
            let mut name = prefix.file_name().unwrap_or_default().to_os_string();
            name.push(".");
            name.push(suffix);
            prefix.with_file_name(name)
        })
        .collect();
    for (path, (_, content)) in paths.iter().zip(files) {
        if let Err(e) = std::fs::write(path, content) {
            for p in &paths {
                let _ = std::fs::remove_file(p);
            }
            return Err(e.into());
        }
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let l2 = args.l2.or(cfg.l2).unwrap_or(1e-6);
    let schema = SchemaConfig::from_json_file(&args.schema)?;
    let dataset = load_csv(&args.data, &schema)?;
    let kinds = parse_kinds(args.kinds.as_deref().unwrap_or("fpr"))?;
    let grid: Vec<f64> = args
        .grid
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad grid entry {p:?}")))
        })
        .collect::<Result<_>>()?;
    let plan = SplitPlan {
        repetitions: args.splits,
        train_fraction: args.train_frac,
        base_seed: args.seed,
    };
    let table = sweep_thresholds(&dataset, &kinds, &grid, l2, &cfg.ccp_config(), &plan)?;

    let mut writer = csv::Writer::from_path(&args.out)?;
    writer.write_record([
        "m", "split", "accuracy", "d_fpr", "d_fnr", "fpr_z0", "fpr_z1", "fnr_z0", "fnr_z1",
        "cov_omr", "cov_fpr", "cov_fnr",
    ])?;
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for row in table.rows.iter().chain(table.means.iter()) {
        writer.write_record([
            format!("{}", row.m),
            row.split.map(|s| s.to_string()).unwrap_or_else(|| "mean".into()),
            format!("{}", row.accuracy),
            fmt_opt(row.d_fpr),
            fmt_opt(row.d_fnr),
            fmt_opt(row.fpr_z0),
            fmt_opt(row.fpr_z1),
            fmt_opt(row.fnr_z0),
            fmt_opt(row.fnr_z1),
            format!("{}", row.cov_omr),
            format!("{}", row.cov_fpr),
            format!("{}", row.cov_fnr),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn cmd_eval(data: &Path, schema: &Path, pred: &Path, out: &Path) -> Result<()> {
    let schema = SchemaConfig::from_json_file(schema)?;
    let dataset = load_csv(data, &schema)?;
    let predictions = read_predictions(pred)?;
    if predictions.len() != dataset.n() {
        return Err(Error::Data(format!(
            "{} predictions for {} data rows",
            predictions.len(),
            dataset.n()
        )));
    }
    let report = error_report(dataset.labels(), &predictions, dataset.sensitive())?;
    std::fs::write(out, serde_json::to_string_pretty(&report.flat_json()).expect("metrics json"))?;
    Ok(())
}

/// Predictions file: CSV with a `pred` column holding −1 / 1.
fn read_predictions(path: &Path) -> Result<Vec<i8>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == "pred")
        .ok_or_else(|| Error::Data(format!("missing column \"pred\" in {}", path.display())))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let value = record[col].trim();
        match value {
            "1" | "+1" => out.push(1),
            "-1" => out.push(-1),
            other => {
                return Err(Error::Data(format!(
                    "line {line}: prediction {other:?} not in {{-1,1}}"
                )))
            }
        }
    }
    Ok(out)
}
