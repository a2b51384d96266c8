//! Reweighting baseline for removing error-rate disparity.
//!
//! Train an unconstrained classifier, pick the misclassified points of the
//! worse-off group for each constrained kind (false positives of the group
//! with the higher FPR, false negatives of the group with the higher FNR),
//! then retrain with an ever-growing penalty weight C on that frozen set
//! until the training-set disparity falls to ε or the round budget runs out.
//! The selection sets are fixed after round 0; only C changes.

use serde::{Deserialize, Serialize};

use crate::boundary::Boundary;
use crate::ccp::{CcpTraceRow, TrainReport};
use crate::constraints::{self, MistreatmentKind};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::logistic;
use crate::metrics;
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// Disparity target on the training set: stop once |D| ≤ ε per kind.
    pub epsilon: f64,
    /// Penalty increment per round.
    pub delta: f64,
    pub max_rounds: usize,
    pub solver: SolverConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { epsilon: 0.01, delta: 1.0, max_rounds: 200, solver: SolverConfig::default() }
    }
}

fn disparity(kind: MistreatmentKind, report: &metrics::GroupErrorReport) -> Result<f64> {
    let d = match kind {
        MistreatmentKind::Fpr => report.d_fpr,
        MistreatmentKind::Fnr => report.d_fnr,
        MistreatmentKind::Omr => {
            return Err(Error::InvalidInput("baseline supports only FPR and FNR kinds".into()))
        }
    };
    d.ok_or_else(|| Error::InvalidInput(format!("disparity for {kind} is undefined on this data")))
}

/// Train the reweighting baseline for the given kinds (any nonempty subset of
/// {FPR, FNR}). Exhausting `max_rounds` is flagged through `converged =
/// false`, not an error.
pub fn train_baseline(
    data: &Dataset,
    kinds: &[MistreatmentKind],
    l2: f64,
    cfg: &BaselineConfig,
) -> Result<TrainReport> {
    if kinds.is_empty() {
        return Err(Error::InvalidInput("baseline needs at least one kind".into()));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if !(cfg.delta > 0.0) {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }

    let fit = logistic::train_unconstrained(data, l2, &cfg.solver)?;
    let mut boundary = fit.boundary;
    let mut report = eval_train(&boundary, data)?;

    // Round-0 selection: per kind, the misclassified points (of the relevant
    // true label) in the worse-off group. Frozen for the rest of the run.
    let round0_pred = boundary.predict_all(data)?;
    let mut penalty_set = vec![false; data.n()];
    for &kind in kinds {
        let d = disparity(kind, &report)?;
        let worse_group: u8 = if d > 0.0 { 0 } else { 1 };
        let target_label: i8 = match kind {
            MistreatmentKind::Fpr => -1,
            MistreatmentKind::Fnr => 1,
            MistreatmentKind::Omr => unreachable!(),
        };
        for i in 0..data.n() {
            if round0_pred[i] != data.label(i)
                && data.z(i) == worse_group
                && data.label(i) == target_label
            {
                penalty_set[i] = true;
            }
        }
    }

    let met = |report: &metrics::GroupErrorReport| -> Result<bool> {
        for &kind in kinds {
            if disparity(kind, report)?.abs() > cfg.epsilon {
                return Ok(false);
            }
        }
        Ok(true)
    };

    let mut trace: Vec<CcpTraceRow> = Vec::new();
    let mut penalty = 1.0;
    let mut converged = met(&report)?;
    let initial_objective = logistic::nll_and_grad(&boundary, data, l2)?.value;

    while !converged && trace.len() < cfg.max_rounds {
        penalty += cfg.delta;
        let weights: Vec<f64> =
            penalty_set.iter().map(|&p| if p { penalty } else { 1.0 }).collect();
        let fit = logistic::train_weighted_from(data, Some(&weights), l2, &cfg.solver, boundary)?;
        boundary = fit.boundary;
        report = eval_train(&boundary, data)?;
        converged = met(&report)?;

        let covs: Vec<f64> = kinds
            .iter()
            .map(|&k| constraints::covariance(k, data, &boundary))
            .collect::<Result<_>>()?;
        trace.push(CcpTraceRow {
            objective: logistic::weighted_nll_and_grad(&boundary, data, &weights, l2)?.value,
            total_slack: 0.0,
            covariances: covs,
            tau: penalty,
            accepted: true,
        });
    }

    let final_covariances: Vec<(MistreatmentKind, f64)> = kinds
        .iter()
        .map(|&k| constraints::covariance(k, data, &boundary).map(|c| (k, c)))
        .collect::<Result<_>>()?;
    Ok(TrainReport {
        feature_names: data.feature_names().to_vec(),
        outer_iterations: trace.len(),
        thresholds: kinds.iter().map(|&k| (k, cfg.epsilon)).collect(),
        reference_covariances: Vec::new(),
        final_slacks: Vec::new(),
        final_covariances,
        trace,
        converged,
        boundary,
        initial_objective,
        initial_total_slack: 0.0,
        seed: 0,
    })
}

fn eval_train(b: &Boundary, data: &Dataset) -> Result<metrics::GroupErrorReport> {
    let pred = b.predict_all(data)?;
    metrics::error_report(data.labels(), &pred, data.sensitive())
}
