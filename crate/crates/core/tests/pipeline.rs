//! Cross-module integration at fixture scale: CSV ingestion feeding metrics,
//! training, and the comparators.

use std::path::PathBuf;

use fairlin_core::baseline::{train_baseline, BaselineConfig};
use fairlin_core::ccp::{evaluate, sweep_thresholds, train_constrained, CcpConfig};
use fairlin_core::constraints::{ConstraintSpec, MistreatmentKind};
use fairlin_core::io::{load_csv, make_splits, SchemaConfig, SplitPlan};
use fairlin_core::logistic::{sigmoid_scores, train_unconstrained};
use fairlin_core::metrics::error_report;
use fairlin_core::postprocess::{apply_group_thresholds, fit_group_thresholds};
use fairlin_core::solver::SolverConfig;
use fairlin_core::synth::{generate_setting, SyntheticSetting};

use MistreatmentKind::{Fnr, Fpr};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

#[test]
fn figure1_loads_and_reproduces_metrics() {
    let schema = SchemaConfig::from_json_file(&fixture("figure1_schema.json")).unwrap();
    let data = load_csv(&fixture("figure1.csv"), &schema).unwrap();
    assert_eq!(data.n(), 6);
    assert_eq!(data.feature_names(), &["clothing_bulge", "prox_crime"]);
    // males are z=1 under the schema's z0_value = Female
    assert_eq!(data.sensitive(), &[1, 1, 1, 0, 0, 0]);
    assert_eq!(data.labels(), &[1, 1, -1, 1, -1, 1]);

    let c1 = [1, 1, 1, 1, 1, -1];
    let report = error_report(data.labels(), &c1, data.sensitive()).unwrap();
    assert_eq!(report.groups[1].fnr, Some(0.0));
    assert_eq!(report.groups[0].fnr, Some(0.5));
    assert_eq!(report.d_impact, Some(2.0 / 3.0 - 1.0));
}

#[test]
fn compas_mini_has_the_documented_encoding() {
    let schema = SchemaConfig::from_json_file(&fixture("compas_schema.json")).unwrap();
    let data = load_csv(&fixture("compas_mini.csv"), &schema).unwrap();
    assert_eq!(data.n(), 200);
    // age(3) + sex(2) + race(2) + priors(1) + charge(2)
    assert_eq!(data.dim(), 10);
    let names = data.feature_names();
    assert!(names.contains(&"age_cat=Less than 25".to_string()));
    assert!(names.contains(&"race=African-American".to_string()));
    assert!(names.contains(&"priors_count".to_string()));
    // blacks are z=0 by schema; 120 of 200 rows
    assert_eq!(data.sensitive().iter().filter(|&&z| z == 0).count(), 120);
    assert_eq!(data.labels().iter().filter(|&&y| y == 1).count(), 62 + 31);
}

#[test]
fn sweep_tightening_converges_group_fprs_and_trades_accuracy() {
    let data = generate_setting(SyntheticSetting::One, 3)
        .unwrap()
        .subset(&(0..2000).collect::<Vec<_>>())
        .unwrap();
    let plan = SplitPlan { repetitions: 2, train_fraction: 0.5, base_seed: 1 };
    let table =
        sweep_thresholds(&data, &[Fpr], &[1.0, 0.5, 0.0], 1e-6, &CcpConfig::default(), &plan)
            .unwrap();
    assert_eq!(table.rows.len(), 6);
    assert_eq!(table.means.len(), 3);
    assert!(table.means.iter().all(|r| r.split.is_none()));

    // tightening m pulls the two groups' false positive rates together
    let gaps: Vec<f64> =
        table.means.iter().map(|r| (r.fpr_z0.unwrap() - r.fpr_z1.unwrap()).abs()).collect();
    assert!(gaps[2] < gaps[1] && gaps[1] < gaps[0], "gaps {gaps:?}");

    // and costs accuracy, up to a small noise band
    let accs: Vec<f64> = table.means.iter().map(|r| r.accuracy).collect();
    assert!(accs[1] <= accs[0] + 0.02 && accs[2] <= accs[1] + 0.02, "accs {accs:?}");
}

#[test]
fn compas_mini_runs_every_training_mode() {
    let schema = SchemaConfig::from_json_file(&fixture("compas_schema.json")).unwrap();
    let data = load_csv(&fixture("compas_mini.csv"), &schema).unwrap();
    let splits = make_splits(&data, &SplitPlan { repetitions: 1, ..Default::default() }).unwrap();
    let train = data.subset(&splits[0].0).unwrap();
    let test = data.subset(&splits[0].1).unwrap();

    let unc = train_unconstrained(&train, 1e-6, &SolverConfig::default()).unwrap();
    let report = evaluate(&unc.boundary, &test).unwrap();
    assert!(report.accuracy > 0.5, "fixture should be learnable: {}", report.accuracy);

    let spec = ConstraintSpec::with_multiplier(&[Fpr, Fnr], 0.5).unwrap();
    let con = train_constrained(&train, &spec, 1e-6, &CcpConfig::default()).unwrap();
    assert_eq!(con.trace.len(), con.outer_iterations);

    let base = train_baseline(
        &train,
        &[Fpr],
        1e-6,
        &BaselineConfig { epsilon: 0.05, max_rounds: 50, ..Default::default() },
    )
    .unwrap();
    assert!(base.outer_iterations <= 50);

    let scores = sigmoid_scores(&unc.boundary, &train).unwrap();
    let rule =
        fit_group_thresholds(&scores, train.labels(), train.sensitive(), &[Fpr], 0.05, false)
            .unwrap();
    let test_scores = sigmoid_scores(&unc.boundary, &test).unwrap();
    let pred = apply_group_thresholds(&rule, &test_scores, test.sensitive(), 0).unwrap();
    assert_eq!(pred.len(), test.n());
}
