//! Fairness-constrained training by the convex-concave procedure.
//!
//! Each covariance constraint splits into a convex and a concave half (the
//! two group sums enter with opposite signs). At every outer iteration the
//! concave half of each one-sided constraint is replaced by its first-order
//! expansion at the current iterate, and the resulting convex subproblem is
//! solved as an exact-penalty problem: slack variables absorb any violation,
//! so the subproblem objective is the negative log-likelihood plus
//! τ·Σ max(0, violation). The penalty weight τ escalates geometrically.
//!
//! The subproblem hinges (both the per-sample g kinks and the penalty hinge)
//! are softplus-smoothed so the deterministic L-BFGS solver applies; the
//! smoothing width is halved every outer iteration. Acceptance is decided on
//! the exact nonsmooth merit function NLL + τ·Σ slack: a candidate that does
//! not decrease it is discarded (the iterate stays put while τ and the
//! smoothing schedule advance), which is what makes the recorded merit
//! non-increasing across accepted iterations.

use serde::{Deserialize, Serialize};

use crate::boundary::Boundary;
use crate::constraints::{self, ConstraintSpec, MistreatmentKind, ThresholdSpec};
use crate::dataset::{partition_by_sensitive, Dataset, GroupPartition};
use crate::error::{Error, Result};
use crate::exec;
use crate::io::{make_splits, SplitPlan};
use crate::logistic;
use crate::metrics::{self, GroupErrorReport};
use crate::solver::{self, SolverConfig};

/// Tuning knobs of the convex-concave procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcpConfig {
    /// Initial slack penalty weight.
    pub tau0: f64,
    /// Geometric growth factor of the penalty.
    pub mu: f64,
    /// Penalty ceiling.
    pub tau_max: f64,
    pub max_outer_iters: usize,
    /// Gradient tolerance of the inner smooth subproblem.
    pub subproblem_tol: f64,
    pub subproblem_max_iter: usize,
    /// Outer stop: change of (objective + penalty) between accepted iterates.
    pub convergence_tol: f64,
    /// Initial softplus smoothing width, halved per outer iteration.
    pub smoothing0: f64,
    /// Seed for randomized initialization. The default initialization (warm
    /// start at the unconstrained optimum) is deterministic, so this is
    /// recorded in the report but does not influence the run.
    pub seed: u64,
}

impl Default for CcpConfig {
    fn default() -> Self {
        Self {
            tau0: 0.5,
            mu: 1.5,
            tau_max: 1e4,
            max_outer_iters: 100,
            subproblem_tol: 1e-6,
            subproblem_max_iter: 500,
            convergence_tol: 1e-5,
            smoothing0: 0.05,
            seed: 0,
        }
    }
}

impl CcpConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0) {
            return Err(Error::InvalidInput("tau0 must be positive".into()));
        }
        if !(self.mu > 1.0) {
            return Err(Error::InvalidInput("mu must exceed 1".into()));
        }
        if self.tau_max < self.tau0 {
            return Err(Error::InvalidInput("tau_max must be at least tau0".into()));
        }
        if !(self.smoothing0 > 0.0) {
            return Err(Error::InvalidInput("smoothing0 must be positive".into()));
        }
        Ok(())
    }
}

const SMOOTHING_FLOOR: f64 = 1e-12;
/// Training-set feasibility margin used for the `converged` flag.
const FEASIBILITY_TOL: f64 = 1e-4;
/// Consecutive rejected iterations at a feasible point before declaring the
/// run stationary.
const REJECT_STREAK: usize = 3;

/// One outer iteration of the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcpTraceRow {
    /// NLL + L2 at the iterate after this iteration.
    pub objective: f64,
    /// Σ over constrained kinds of max(0, |cov| − c)/c*: the penalized,
    /// scale-free slack. The merit of a row is objective + tau·total_slack.
    pub total_slack: f64,
    /// Covariance per constrained kind, in constraint-spec order.
    pub covariances: Vec<f64>,
    /// Penalty weight used by this iteration's subproblem.
    pub tau: f64,
    /// Whether the candidate replaced the iterate.
    pub accepted: bool,
}

/// Outcome of a constrained (or baseline) training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub boundary: Boundary,
    pub feature_names: Vec<String>,
    pub outer_iterations: usize,
    /// Resolved covariance bound per constrained kind.
    pub thresholds: Vec<(MistreatmentKind, f64)>,
    /// Unconstrained covariance magnitude c* per kind: the scale that
    /// normalizes slack in the penalty, and the anchor of multiplier
    /// thresholds.
    pub reference_covariances: Vec<(MistreatmentKind, f64)>,
    /// max(0, |cov| − c) per constrained kind at the final boundary.
    pub final_slacks: Vec<(MistreatmentKind, f64)>,
    pub final_covariances: Vec<(MistreatmentKind, f64)>,
    pub trace: Vec<CcpTraceRow>,
    pub converged: bool,
    pub initial_objective: f64,
    /// Initial Σ slack/c* (the penalized, scale-free quantity).
    pub initial_total_slack: f64,
    pub seed: u64,
}

/// Per-kind state of one objective evaluation: smoothed group sums and their
/// gradients.
struct KindEval {
    s0: f64,
    s1: f64,
    g0: Vec<f64>,
    g1: Vec<f64>,
}

struct FusedEval {
    objective: f64,
    gradient: Vec<f64>,
    kinds: Vec<KindEval>,
}

/// One pass over the data: NLL + L2 with gradient, and per kind the smoothed
/// group sums S₀, S₁ with gradients. `beta == 0` selects the exact kinked g.
fn fused_eval(
    data: &Dataset,
    kinds: &[MistreatmentKind],
    theta: &[f64],
    l2: f64,
    beta: f64,
) -> FusedEval {
    let dim = data.dim() + 1;
    let b = Boundary::new_unchecked(theta.to_vec());
    let k = kinds.len();

    #[derive(Clone)]
    struct Partial {
        nll: f64,
        nll_grad: Vec<f64>,
        s: Vec<f64>,      // 2 per kind: s0, s1
        g: Vec<Vec<f64>>, // 2 per kind: g0, g1
    }
    let zero = |dim: usize, k: usize| Partial {
        nll: 0.0,
        nll_grad: vec![0.0; dim],
        s: vec![0.0; 2 * k],
        g: vec![vec![0.0; dim]; 2 * k],
    };

    let map = |range: std::ops::Range<usize>| {
        let mut p = zero(dim, k);
        for i in range {
            let x = data.row(i);
            let y = data.label(i) as f64;
            let d = b.signed_distance_unchecked(x);
            let t = y * d;

            let (sp, sg) = logistic::softplus_sigmoid(-t);
            p.nll += sp;
            let coef = -y * sg;
            for (gj, v) in p.nll_grad[..x.len()].iter_mut().zip(x) {
                *gj += coef * v;
            }
            p.nll_grad[x.len()] += coef;

            let slot = data.z(i) as usize;
            for (ki, kind) in kinds.iter().enumerate() {
                let sel = kind.selector(data.label(i));
                if sel == 0.0 {
                    continue;
                }
                let (val, deriv) = if beta > 0.0 {
                    let (sp_g, sg_g) = logistic::softplus_sigmoid(-t / beta);
                    (-beta * sp_g, sg_g)
                } else {
                    (constraints::g_exact(t), f64::from(t < 0.0))
                };
                p.s[2 * ki + slot] += val;
                let gcoef = deriv * y;
                let gv = &mut p.g[2 * ki + slot];
                for (gj, v) in gv[..x.len()].iter_mut().zip(x) {
                    *gj += gcoef * v;
                }
                gv[x.len()] += gcoef;
            }
        }
        p
    };
    let reduce = |mut a: Partial, b: Partial| {
        a.nll += b.nll;
        exec::add_assign(&mut a.nll_grad, &b.nll_grad);
        for (x, y) in a.s.iter_mut().zip(&b.s) {
            *x += *y;
        }
        for (x, y) in a.g.iter_mut().zip(&b.g) {
            exec::add_assign(x, y);
        }
        a
    };

    let mut p = exec::fold_chunks(data.n(), zero(dim, k), map, reduce);

    let mut state =
        logistic::LogisticLossState { value: p.nll, gradient: std::mem::take(&mut p.nll_grad) };
    logistic::add_l2(&mut state, theta, l2);

    let kinds_out = (0..k)
        .map(|ki| KindEval {
            s0: p.s[2 * ki],
            s1: p.s[2 * ki + 1],
            g0: std::mem::take(&mut p.g[2 * ki]),
            g1: std::mem::take(&mut p.g[2 * ki + 1]),
        })
        .collect();

    FusedEval { objective: state.value, gradient: state.gradient, kinds: kinds_out }
}

/// Frozen affine majorants of the concave halves of both one-sided
/// constraints for one kind, at the current linearization point. Everything
/// lives at covariance scale, matching the merit function: the capped penalty
/// weight then acts as a bounded price on covariance slack, which is what
/// leaves the soft operating points reachable (driving the covariance all the
/// way to zero costs far more accuracy than the constrained optimum the
/// penalty cap selects).
struct KindLinearization {
    a_le: Vec<f64>,
    const_le: f64,
    a_ge: Vec<f64>,
    const_ge: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-kind scale-free constraint weights: covariance divided by that kind's
/// unconstrained magnitude c*, so one penalty schedule prices every
/// constraint comparably (and the multiplier threshold becomes simply m).
fn kind_scales(part: &GroupPartition, n: f64, normalizers: &[f64]) -> Vec<(f64, f64)> {
    normalizers
        .iter()
        .map(|nu| (part.n1 as f64 / (n * n * nu), part.n0 as f64 / (n * n * nu)))
        .collect()
}

fn linearize(
    eval: &FusedEval,
    theta: &[f64],
    scales: &[(f64, f64)],
    thresholds_rel: &[f64],
) -> Vec<KindLinearization> {
    eval.kinds
        .iter()
        .zip(scales)
        .zip(thresholds_rel)
        .map(|((ke, &(coef0, coef1)), &c)| {
            let cvx_val = -coef0 * ke.s0;
            let ccv_val = coef1 * ke.s1;
            let cvx_grad: Vec<f64> = ke.g0.iter().map(|g| -coef0 * g).collect();
            let ccv_grad: Vec<f64> = ke.g1.iter().map(|g| coef1 * g).collect();
            // upper side: cvx(θ) + [ccv(θk) + ∇ccv·(θ − θk)] ≤ c
            let const_le = ccv_val - dot(&ccv_grad, theta) - c;
            // lower side as −lhs ≤ c: −ccv(θ) + [−cvx(θk) − ∇cvx·(θ − θk)] ≤ c
            let const_ge = -cvx_val + dot(&cvx_grad, theta) - c;
            KindLinearization {
                a_le: ccv_grad,
                const_le,
                a_ge: cvx_grad.iter().map(|g| -g).collect(),
                const_ge,
            }
        })
        .collect()
}

/// Exact covariances per constrained kind at a boundary.
fn covariances_at(kinds: &[MistreatmentKind], data: &Dataset, b: &Boundary) -> Result<Vec<f64>> {
    kinds.iter().map(|&k| constraints::covariance(k, data, b)).collect()
}

/// Scale-free total slack: Σ max(0, |cov| − c)/c*.
fn total_slack(covs: &[f64], thresholds: &[f64], normalizers: &[f64]) -> f64 {
    covs.iter()
        .zip(thresholds)
        .zip(normalizers)
        .map(|((cv, c), nu)| (cv.abs() - c).max(0.0) / nu)
        .sum()
}

/// Exact merit: objective + τ·Σ slack/c*.
fn merit(objective: f64, slack: f64, tau: f64) -> f64 {
    objective + tau * slack
}

/// The convexified left-hand side of one one-sided constraint, linearized at
/// `at` and evaluated at `theta`, in covariance units. By construction it
/// equals the true covariance (upper side) or its negation (lower side) when
/// `theta == at`.
pub fn convexified_lhs(
    kind: MistreatmentKind,
    upper_side: bool,
    data: &Dataset,
    partition: &GroupPartition,
    at: &Boundary,
    theta: &Boundary,
) -> Result<f64> {
    let n = data.n() as f64;
    let coef0 = partition.n1 as f64 / (n * n);
    let coef1 = partition.n0 as f64 / (n * n);
    let (s0_at, s1_at) = constraints::dc_group_sums(kind, data, partition, at)?;
    let (g0_at, g1_at) = constraints::dc_group_subgradients(kind, data, partition, at)?;
    let (s0, s1) = constraints::dc_group_sums(kind, data, partition, theta)?;
    let delta: Vec<f64> = theta.theta().iter().zip(at.theta()).map(|(a, b)| a - b).collect();
    if upper_side {
        // convex half exact, concave half linearized
        let ccv_lin = coef1 * s1_at + coef1 * dot(&g1_at, &delta);
        Ok(-coef0 * s0 + ccv_lin)
    } else {
        // −lhs: the roles of the two halves swap
        let cvx_lin = -coef0 * s0_at - coef0 * dot(&g0_at, &delta);
        Ok(-(coef1 * s1) - cvx_lin)
    }
}

/// Train a logistic boundary subject to the covariance fairness constraints.
///
/// Multiplier thresholds are resolved against the covariance magnitude of a
/// freshly trained unconstrained boundary (c = m·c*), which also serves as
/// the initial iterate.
pub fn train_constrained(
    data: &Dataset,
    spec: &ConstraintSpec,
    l2: f64,
    cfg: &CcpConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    let part = partition_by_sensitive(data);
    if part.n0 == 0 {
        return Err(Error::SingleGroup(1));
    }
    if part.n1 == 0 {
        return Err(Error::SingleGroup(0));
    }

    let kinds = spec.kinds();
    let n = data.n() as f64;

    // Unconstrained warm start; anchors multiplier thresholds and the
    // per-kind slack normalizers.
    let unconstrained = logistic::train_unconstrained(data, l2, &SolverConfig::default())?;
    let mut theta = unconstrained.boundary.theta().to_vec();

    let mut thresholds = Vec::with_capacity(kinds.len());
    let mut references = Vec::with_capacity(kinds.len());
    for (kind, t) in spec.items() {
        let c_star = constraints::covariance(*kind, data, &unconstrained.boundary)?.abs();
        references.push(c_star);
        thresholds.push(match t {
            ThresholdSpec::Absolute(c) => *c,
            ThresholdSpec::Multiplier(m) => m * c_star,
        });
    }
    let normalizers: Vec<f64> = references.iter().map(|c| c.max(1e-12)).collect();
    let thresholds_rel: Vec<f64> =
        thresholds.iter().zip(&normalizers).map(|(c, nu)| c / nu).collect();
    let scales = kind_scales(&part, n, &normalizers);

    let mut covs = covariances_at(&kinds, data, &unconstrained.boundary)?;
    let mut objective = logistic::nll_and_grad(&unconstrained.boundary, data, l2)?.value;
    let initial_objective = objective;
    let initial_total_slack = total_slack(&covs, &thresholds, &normalizers);
    let mut slack = initial_total_slack;

    let mut tau = cfg.tau0;
    let mut beta = cfg.smoothing0;
    let mut trace: Vec<CcpTraceRow> = Vec::new();
    let mut converged = false;
    let mut rejected_streak = 0usize;

    for _ in 0..cfg.max_outer_iters {
        // Freeze the concave halves at the current iterate.
        let at_eval = fused_eval(data, &kinds, &theta, l2, beta);
        let lins = linearize(&at_eval, &theta, &scales, &thresholds_rel);

        let subproblem = |x: &[f64]| {
            let ev = fused_eval(data, &kinds, x, l2, beta);
            let mut f = ev.objective;
            let mut grad = ev.gradient;
            for ((ke, lin), &(coef0, coef1)) in ev.kinds.iter().zip(&lins).zip(&scales) {
                let v_le = -coef0 * ke.s0 + dot(&lin.a_le, x) + lin.const_le;
                let v_ge = -coef1 * ke.s1 + dot(&lin.a_ge, x) + lin.const_ge;
                let (sp_le, sg_le) = logistic::softplus_sigmoid(v_le / beta);
                let (sp_ge, sg_ge) = logistic::softplus_sigmoid(v_ge / beta);
                f += tau * beta * (sp_le + sp_ge);
                let w_le = tau * sg_le;
                let w_ge = tau * sg_ge;
                for (j, g) in grad.iter_mut().enumerate() {
                    *g += w_le * (-coef0 * ke.g0[j] + lin.a_le[j])
                        + w_ge * (-coef1 * ke.g1[j] + lin.a_ge[j]);
                }
            }
            (f, grad)
        };

        let solved = solver::minimize(
            subproblem,
            theta.clone(),
            &SolverConfig { tol: cfg.subproblem_tol, max_iter: cfg.subproblem_max_iter },
        )?;

        let cand = Boundary::new(solved.x)?;
        let cand_objective = logistic::nll_and_grad(&cand, data, l2)?.value;
        let cand_covs = covariances_at(&kinds, data, &cand)?;
        let cand_slack = total_slack(&cand_covs, &thresholds, &normalizers);

        let merit_prev = merit(objective, slack, tau);
        let merit_cand = merit(cand_objective, cand_slack, tau);
        let accepted = merit_cand <= merit_prev;

        if accepted {
            theta = cand.theta().to_vec();
            objective = cand_objective;
            covs = cand_covs;
            slack = cand_slack;
            rejected_streak = 0;
        } else {
            rejected_streak += 1;
        }

        trace.push(CcpTraceRow {
            objective,
            total_slack: slack,
            covariances: covs.clone(),
            tau,
            accepted,
        });

        let feasible = covs.iter().zip(&thresholds).all(|(cv, c)| cv.abs() <= c + FEASIBILITY_TOL);
        let stalled = (accepted && (merit_prev - merit_cand) <= cfg.convergence_tol)
            || (!accepted && rejected_streak >= REJECT_STREAK);
        if stalled {
            if feasible {
                converged = true;
                break;
            }
            if tau >= cfg.tau_max {
                // Penalty fully escalated and the merit cannot improve: the
                // capped-penalty optimum keeps its residual slack. Reported
                // as not converged; the report carries the final slacks.
                break;
            }
        }

        // Escalate the penalty only while infeasible; once inside, a frozen τ
        // leaves the likelihood term room to recover along the constraint
        // surface instead of cementing the first feasible point found.
        if !feasible {
            tau = (tau * cfg.mu).min(cfg.tau_max);
        }
        beta = (beta * 0.5).max(SMOOTHING_FLOOR);
    }

    let boundary = Boundary::new(theta)?;
    Ok(TrainReport {
        outer_iterations: trace.len(),
        thresholds: kinds.iter().copied().zip(thresholds.iter().copied()).collect(),
        reference_covariances: kinds.iter().copied().zip(references.iter().copied()).collect(),
        final_slacks: kinds
            .iter()
            .copied()
            .zip(covs.iter().zip(&thresholds).map(|(cv, c)| (cv.abs() - c).max(0.0)))
            .collect(),
        final_covariances: kinds.iter().copied().zip(covs.iter().copied()).collect(),
        trace,
        converged,
        boundary,
        feature_names: data.feature_names().to_vec(),
        initial_objective,
        initial_total_slack,
        seed: cfg.seed,
    })
}

/// One evaluated grid point of a fairness/accuracy sweep. `split == None`
/// marks the across-splits average row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: f64,
    pub split: Option<usize>,
    pub accuracy: f64,
    pub d_fpr: Option<f64>,
    pub d_fnr: Option<f64>,
    pub fpr_z0: Option<f64>,
    pub fpr_z1: Option<f64>,
    pub fnr_z0: Option<f64>,
    pub fnr_z1: Option<f64>,
    /// Covariances of the trained boundary on its training split.
    pub cov_omr: f64,
    pub cov_fpr: f64,
    pub cov_fnr: f64,
}

/// Sweep result: per-(m, split) rows plus one averaged row per m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub means: Vec<SweepRow>,
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v?;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// Train one constrained classifier per (multiplier, split) pair and report
/// test-split metrics, plus the per-multiplier averages. Jobs run on the
/// worker pool; row order is deterministic regardless of scheduling.
pub fn sweep_thresholds(
    data: &Dataset,
    kinds: &[MistreatmentKind],
    m_grid: &[f64],
    l2: f64,
    cfg: &CcpConfig,
    plan: &SplitPlan,
) -> Result<SweepTable> {
    if m_grid.is_empty() {
        return Err(Error::InvalidInput("multiplier grid must be nonempty".into()));
    }
    let splits = make_splits(data, plan)?;
    let jobs: Vec<(usize, usize)> =
        (0..m_grid.len()).flat_map(|mi| (0..splits.len()).map(move |si| (mi, si))).collect();

    let results: Vec<Result<SweepRow>> = exec::ordered_map(jobs, |(mi, si)| {
        let m = m_grid[mi];
        let (train_ix, test_ix) = &splits[si];
        let train = data.subset(train_ix)?;
        let test = data.subset(test_ix)?;
        let spec = ConstraintSpec::with_multiplier(kinds, m)?;
        let report = train_constrained(&train, &spec, l2, cfg)?;
        let pred = report.boundary.predict_all(&test)?;
        let er = metrics::error_report(test.labels(), &pred, test.sensitive())?;
        Ok(SweepRow {
            m,
            split: Some(si),
            accuracy: er.accuracy,
            d_fpr: er.d_fpr,
            d_fnr: er.d_fnr,
            fpr_z0: er.groups[0].fpr,
            fpr_z1: er.groups[1].fpr,
            fnr_z0: er.groups[0].fnr,
            fnr_z1: er.groups[1].fnr,
            cov_omr: constraints::covariance(MistreatmentKind::Omr, &train, &report.boundary)?,
            cov_fpr: constraints::covariance(MistreatmentKind::Fpr, &train, &report.boundary)?,
            cov_fnr: constraints::covariance(MistreatmentKind::Fnr, &train, &report.boundary)?,
        })
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;

    let means = (0..m_grid.len())
        .map(|mi| {
            let group: Vec<&SweepRow> =
                rows.iter().filter(|r| r.split.is_some() && r.m == m_grid[mi]).collect();
            let k = group.len() as f64;
            SweepRow {
                m: m_grid[mi],
                split: None,
                accuracy: group.iter().map(|r| r.accuracy).sum::<f64>() / k,
                d_fpr: mean_opt(group.iter().map(|r| r.d_fpr)),
                d_fnr: mean_opt(group.iter().map(|r| r.d_fnr)),
                fpr_z0: mean_opt(group.iter().map(|r| r.fpr_z0)),
                fpr_z1: mean_opt(group.iter().map(|r| r.fpr_z1)),
                fnr_z0: mean_opt(group.iter().map(|r| r.fnr_z0)),
                fnr_z1: mean_opt(group.iter().map(|r| r.fnr_z1)),
                cov_omr: group.iter().map(|r| r.cov_omr).sum::<f64>() / k,
                cov_fpr: group.iter().map(|r| r.cov_fpr).sum::<f64>() / k,
                cov_fnr: group.iter().map(|r| r.cov_fnr).sum::<f64>() / k,
            }
        })
        .collect();

    Ok(SweepTable { rows, means })
}

/// Evaluate a boundary on a dataset: predictions → group error report.
pub fn evaluate(boundary: &Boundary, data: &Dataset) -> Result<GroupErrorReport> {
    let pred = boundary.predict_all(data)?;
    metrics::error_report(data.labels(), &pred, data.sensitive())
}
