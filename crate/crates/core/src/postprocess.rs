//! Group-specific decision thresholds on a fixed scorer.
//!
//! Given per-sample scores from an already-trained model, fit one decision
//! rule per sensitive group so that the constrained error-rate disparities on
//! the fitting data drop to ε while accuracy stays as high as possible. For a
//! single constrained kind an exhaustive search over score-midpoint threshold
//! pairs is exact. Equalizing FPR and FNR simultaneously usually needs
//! randomization: each group's rule may mix two thresholds, which reaches any
//! point on a chord of that group's ROC curve; the fit picks the
//! accuracy-best point on the pointwise minimum of the two groups' concave
//! ROC envelopes and solves each group's mixing weight in closed form.
//!
//! Applying the rule needs the sensitive attribute at decision time, which is
//! the structural cost of this method; the rule carries an explicit
//! `requires_sensitive_at_decision` marker for report tagging.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::MistreatmentKind;
use crate::error::{Error, Result};

/// Decision rule for one group: predict +1 iff score ≥ threshold, where the
/// threshold may be a seeded Bernoulli mixture of two values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GroupRule {
    Deterministic {
        threshold: f64,
    },
    /// Use `t_a` with probability `weight`, else `t_b`.
    Mixture {
        t_a: f64,
        t_b: f64,
        weight: f64,
    },
}

/// Expected error rates of a fitted rule on its fitting data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleStats {
    pub fpr: f64,
    pub fnr: f64,
}

/// Fitted pair of group rules plus their expected fitting-data operating
/// points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    /// Indexed by sensitive value.
    pub rules: [GroupRule; 2],
    pub kinds: Vec<MistreatmentKind>,
    pub epsilon: f64,
    pub fitted: [RuleStats; 2],
    /// Expected accuracy on the fitting data.
    pub fitted_accuracy: f64,
    /// Always true: group-specific thresholds read z when deciding.
    pub requires_sensitive_at_decision: bool,
}

/// One candidate threshold of a group with its exact operating point.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    threshold: f64,
    fpr: f64,
    tpr: f64,
    correct: usize,
}

struct GroupData {
    candidates: Vec<Candidate>,
    pos: usize,
    neg: usize,
}

/// Enumerate every distinct thresholding of a group: strictly between each
/// pair of adjacent distinct scores, plus one above all and one below all.
fn group_candidates(scores: &[f64], truth: &[i8]) -> GroupData {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let pos = truth.iter().filter(|&&y| y == 1).count();
    let neg = truth.len() - pos;

    let mut candidates = Vec::with_capacity(scores.len() + 1);
    let mut tp = 0usize;
    let mut fp = 0usize;
    let push = |cands: &mut Vec<Candidate>, threshold: f64, tp: usize, fp: usize| {
        cands.push(Candidate {
            threshold,
            fpr: if neg > 0 { fp as f64 / neg as f64 } else { 0.0 },
            tpr: if pos > 0 { tp as f64 / pos as f64 } else { 1.0 },
            correct: tp + (neg - fp),
        });
    };
    // nothing predicted positive
    push(&mut candidates, scores[order[0]] + 1.0, tp, fp);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let threshold = if i < order.len() { (s + scores[order[i]]) / 2.0 } else { s - 1.0 };
        push(&mut candidates, threshold, tp, fp);
    }
    GroupData { candidates, pos, neg }
}

fn rate_of(kind: MistreatmentKind, c: &Candidate) -> f64 {
    match kind {
        MistreatmentKind::Fpr => c.fpr,
        MistreatmentKind::Fnr => 1.0 - c.tpr,
        MistreatmentKind::Omr => unreachable!("validated before the search"),
    }
}

/// Exhaustive deterministic pair search under the kind constraints.
fn best_deterministic_pair(
    g0: &GroupData,
    g1: &GroupData,
    kinds: &[MistreatmentKind],
    epsilon: f64,
) -> Option<(usize, usize, usize)> {
    let mut best: Option<(usize, usize, usize)> = None; // (correct, i0, i1)
    for (i0, c0) in g0.candidates.iter().enumerate() {
        for (i1, c1) in g1.candidates.iter().enumerate() {
            if kinds.iter().any(|&k| (rate_of(k, c0) - rate_of(k, c1)).abs() > epsilon) {
                continue;
            }
            let correct = c0.correct + c1.correct;
            if best.is_none_or(|(bc, _, _)| correct > bc) {
                best = Some((correct, i0, i1));
            }
        }
    }
    best
}

/// Upper concave envelope of a group's ROC points, as indices into its
/// candidate list, ordered by increasing FPR.
fn roc_hull(g: &GroupData) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&g.candidates[a], &g.candidates[b]);
        ca.fpr.partial_cmp(&cb.fpr).unwrap().then(ca.tpr.partial_cmp(&cb.tpr).unwrap())
    });
    let mut hull: Vec<usize> = Vec::new();
    for &i in &order {
        let c = &g.candidates[i];
        while hull.len() >= 2 {
            let a = &g.candidates[hull[hull.len() - 2]];
            let b = &g.candidates[hull[hull.len() - 1]];
            let cross = (b.fpr - a.fpr) * (c.tpr - a.tpr) - (b.tpr - a.tpr) * (c.fpr - a.fpr);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        // drop duplicate fpr with lower tpr
        if let Some(&last) = hull.last() {
            let l = &g.candidates[last];
            if l.fpr == c.fpr {
                if c.tpr > l.tpr {
                    hull.pop();
                } else {
                    continue;
                }
            }
        }
        hull.push(i);
    }
    hull
}

/// Envelope value at a given FPR, with the chord endpoints used.
fn envelope_at(g: &GroupData, hull: &[usize], fpr: f64) -> (f64, usize, usize) {
    debug_assert!(!hull.is_empty());
    let cands = &g.candidates;
    if fpr <= cands[hull[0]].fpr {
        return (cands[hull[0]].tpr, hull[0], hull[0]);
    }
    for w in hull.windows(2) {
        let (a, b) = (&cands[w[0]], &cands[w[1]]);
        if fpr <= b.fpr {
            if b.fpr == a.fpr {
                return (b.tpr, w[1], w[1]);
            }
            let t = (fpr - a.fpr) / (b.fpr - a.fpr);
            return (a.tpr + t * (b.tpr - a.tpr), w[0], w[1]);
        }
    }
    let last = *hull.last().unwrap();
    (cands[last].tpr, last, last)
}

/// Mixture of two candidates hitting `fpr` exactly (weight on the first).
fn mix_for_fpr(a: &Candidate, b: &Candidate, fpr: f64) -> Option<f64> {
    if (a.fpr - b.fpr).abs() < 1e-15 {
        return ((fpr - a.fpr).abs() < 1e-12).then_some(1.0);
    }
    let w = (fpr - b.fpr) / (a.fpr - b.fpr);
    (-1e-12..=1.0 + 1e-12).contains(&w).then(|| w.clamp(0.0, 1.0))
}

fn expected_rule(
    g: &GroupData,
    i_a: usize,
    i_b: usize,
    weight: f64,
) -> (GroupRule, RuleStats, f64) {
    let (a, b) = (&g.candidates[i_a], &g.candidates[i_b]);
    let fpr = weight * a.fpr + (1.0 - weight) * b.fpr;
    let tpr = weight * a.tpr + (1.0 - weight) * b.tpr;
    let correct = weight * a.correct as f64 + (1.0 - weight) * b.correct as f64;
    let rule = if i_a == i_b || weight >= 1.0 {
        GroupRule::Deterministic { threshold: a.threshold }
    } else if weight <= 0.0 {
        GroupRule::Deterministic { threshold: b.threshold }
    } else {
        GroupRule::Mixture { t_a: a.threshold, t_b: b.threshold, weight }
    };
    (rule, RuleStats { fpr, fnr: 1.0 - tpr }, correct)
}

/// Realize a target (fpr*, tpr*) for one group as a two-threshold mixture
/// whose FPR matches exactly and whose TPR lands within `epsilon`. Prefers
/// the envelope chord; falls back to a search over candidate pairs bracketing
/// the target FPR.
fn realize_target(
    g: &GroupData,
    hull: &[usize],
    fpr: f64,
    tpr: f64,
    epsilon: f64,
) -> Option<(GroupRule, RuleStats, f64)> {
    let (env_tpr, left, right) = envelope_at(g, hull, fpr);
    if (env_tpr - tpr).abs() <= epsilon {
        let w = mix_for_fpr(&g.candidates[left], &g.candidates[right], fpr)?;
        return Some(expected_rule(g, left, right, w));
    }
    // interior target: pick the bracketing pair whose chord crosses closest
    let mut best: Option<(f64, usize, usize, f64)> = None; // (|Δtpr|, a, b, w)
    for (ia, a) in g.candidates.iter().enumerate() {
        if a.fpr > fpr {
            continue;
        }
        for (ib, b) in g.candidates.iter().enumerate() {
            if b.fpr < fpr {
                continue;
            }
            let Some(w) = mix_for_fpr(a, b, fpr) else { continue };
            let t = w * a.tpr + (1.0 - w) * b.tpr;
            let gap = (t - tpr).abs();
            if best.is_none_or(|(bg, ..)| gap < bg) {
                best = Some((gap, ia, ib, w));
            }
        }
    }
    let (gap, ia, ib, w) = best?;
    (gap <= epsilon).then(|| expected_rule(g, ia, ib, w))
}

fn validate_inputs(
    scores: &[f64],
    truth: &[i8],
    sensitive: &[u8],
    kinds: &[MistreatmentKind],
) -> Result<()> {
    if scores.len() != truth.len() || scores.len() != sensitive.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: truth.len().min(sensitive.len()),
        });
    }
    if scores.is_empty() {
        return Err(Error::InvalidInput("empty fitting data".into()));
    }
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    if kinds.is_empty() || kinds.contains(&MistreatmentKind::Omr) {
        return Err(Error::InvalidInput(
            "threshold post-processing supports FPR, FNR, or both".into(),
        ));
    }
    if !sensitive.contains(&0) || !sensitive.contains(&1) {
        return Err(Error::InvalidInput("both sensitive groups must be present".into()));
    }
    Ok(())
}

/// Fit per-group thresholds so the constrained disparities on the fitting
/// data are ≤ ε, maximizing (expected) accuracy. With both kinds constrained
/// and `allow_randomized`, group rules may mix two thresholds; with
/// randomization disabled an infeasible ε is flagged as an error.
pub fn fit_group_thresholds(
    scores: &[f64],
    truth: &[i8],
    sensitive: &[u8],
    kinds: &[MistreatmentKind],
    epsilon: f64,
    allow_randomized: bool,
) -> Result<ThresholdRule> {
    validate_inputs(scores, truth, sensitive, kinds)?;
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidInput("epsilon must be nonnegative".into()));
    }

    let mut parts: [(Vec<f64>, Vec<i8>); 2] = [(vec![], vec![]), (vec![], vec![])];
    for i in 0..scores.len() {
        let slot = &mut parts[sensitive[i] as usize];
        slot.0.push(scores[i]);
        slot.1.push(truth[i]);
    }
    let g0 = group_candidates(&parts[0].0, &parts[0].1);
    let g1 = group_candidates(&parts[1].0, &parts[1].1);
    for (g, name) in [(&g0, "z=0"), (&g1, "z=1")] {
        let needs_neg = kinds.contains(&MistreatmentKind::Fpr);
        let needs_pos = kinds.contains(&MistreatmentKind::Fnr);
        if (needs_neg && g.neg == 0) || (needs_pos && g.pos == 0) {
            return Err(Error::InvalidInput(format!(
                "group {name} lacks the class needed by the constrained rate"
            )));
        }
    }
    let n = scores.len() as f64;

    let deterministic = best_deterministic_pair(&g0, &g1, kinds, epsilon).map(|(_, i0, i1)| {
        let (r0, s0, c0) = expected_rule(&g0, i0, i0, 1.0);
        let (r1, s1, c1) = expected_rule(&g1, i1, i1, 1.0);
        ([r0, r1], [s0, s1], (c0 + c1) / n)
    });

    // Randomized mixtures only make sense when both rates are pinned at once.
    let randomized = if allow_randomized && kinds.len() == 2 {
        let hull0 = roc_hull(&g0);
        let hull1 = roc_hull(&g1);
        // candidate target FPRs: hull vertices plus envelope crossings
        let mut fprs: Vec<f64> = hull0
            .iter()
            .map(|&i| g0.candidates[i].fpr)
            .chain(hull1.iter().map(|&i| g1.candidates[i].fpr))
            .collect();
        fprs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        fprs.dedup();
        let mut targets: Vec<(f64, f64)> = Vec::new();
        let mut prev: Option<(f64, f64, f64)> = None; // fpr, env0, env1
        for &f in &fprs {
            let e0 = envelope_at(&g0, &hull0, f).0;
            let e1 = envelope_at(&g1, &hull1, f).0;
            if let Some((pf, p0, p1)) = prev {
                // add the crossing between consecutive grid points
                let (da, db) = (p0 - p1, e0 - e1);
                if da * db < 0.0 {
                    let t = da / (da - db);
                    let fx = pf + t * (f - pf);
                    let ex = envelope_at(&g0, &hull0, fx).0.min(envelope_at(&g1, &hull1, fx).0);
                    targets.push((fx, ex));
                }
            }
            targets.push((f, e0.min(e1)));
            prev = Some((f, e0, e1));
        }
        // accuracy is linear in the target, so scanning the vertex set is exact
        let total_pos = (g0.pos + g1.pos) as f64;
        let total_neg = (g0.neg + g1.neg) as f64;
        targets.sort_by(|a, b| {
            let acc_a = total_pos * a.1 + total_neg * (1.0 - a.0);
            let acc_b = total_pos * b.1 + total_neg * (1.0 - b.0);
            acc_b.partial_cmp(&acc_a).unwrap()
        });
        let mut found = None;
        for (f, t) in targets {
            let Some((r0, s0, c0)) = realize_target(&g0, &hull0, f, t, epsilon) else { continue };
            let Some((r1, s1, c1)) = realize_target(&g1, &hull1, f, t, epsilon) else { continue };
            found = Some(([r0, r1], [s0, s1], (c0 + c1) / n));
            break;
        }
        found
    } else {
        None
    };

    let chosen = match (deterministic, randomized) {
        (Some(d), Some(r)) => Some(if r.2 > d.2 { r } else { d }),
        (d, r) => d.or(r),
    };
    let Some((rules, fitted, fitted_accuracy)) = chosen else {
        return Err(Error::Infeasible(format!(
            "no threshold pair meets epsilon = {epsilon} (randomization {})",
            if allow_randomized { "enabled" } else { "disabled" }
        )));
    };
    Ok(ThresholdRule {
        rules,
        kinds: kinds.to_vec(),
        epsilon,
        fitted,
        fitted_accuracy,
        requires_sensitive_at_decision: true,
    })
}

/// Apply a fitted rule to scored samples. Mixture rules draw their threshold
/// choice per sample from a generator seeded with `seed`, so equal seeds give
/// identical outputs.
pub fn apply_group_thresholds(
    rule: &ThresholdRule,
    scores: &[f64],
    sensitive: &[u8],
    seed: u64,
) -> Result<Vec<i8>> {
    if scores.len() != sensitive.len() {
        return Err(Error::DimensionMismatch { expected: scores.len(), got: sensitive.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    scores
        .iter()
        .zip(sensitive)
        .map(|(&s, &z)| {
            if z > 1 {
                return Err(Error::InvalidInput(format!("unseen group value {z}")));
            }
            let threshold = match rule.rules[z as usize] {
                GroupRule::Deterministic { threshold } => threshold,
                GroupRule::Mixture { t_a, t_b, weight } => {
                    if rng.gen::<f64>() < weight {
                        t_a
                    } else {
                        t_b
                    }
                }
            };
            Ok(if s >= threshold { 1 } else { -1 })
        })
        .collect()
}
