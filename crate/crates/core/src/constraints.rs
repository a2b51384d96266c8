//! Fairness covariance proxies.
//!
//! For a boundary θ and a sample (x, y), the misclassification measure
//! g(y, x) = min(0, s·y·θᵀx̃) is zero for correctly classified points and
//! grows (negatively) with the margin of misclassified ones; the selector s
//! restricts it to the error type of interest (all errors, false positives,
//! or false negatives). The empirical covariance between the sensitive
//! attribute and g,
//!
//!   cov = (1/N) Σᵢ (zᵢ − z̄) g(yᵢ, xᵢ),
//!
//! is the trainable proxy for error-rate disparity. Splitting the sum by
//! group gives the equivalent two-term form
//!
//!   cov = (−N₁·S₀ + N₀·S₁) / N²,   S_g = Σ_{i: zᵢ=g} g(yᵢ, xᵢ),
//!
//! whose two halves enter with opposite signs: a difference of convex
//! functions of θ, which is what the constrained trainer exploits.

use serde::{Deserialize, Serialize};

use crate::boundary::Boundary;
use crate::dataset::{Dataset, GroupPartition};
use crate::error::{Error, Result};
use crate::exec;

/// Which misclassification rate a constraint targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MistreatmentKind {
    /// Overall misclassification rate.
    Omr,
    /// False positive rate (errors on true negatives).
    Fpr,
    /// False negative rate (errors on true positives).
    Fnr,
}

impl MistreatmentKind {
    /// Selector multiplier applied to y·d: 1 when the sample's true label is
    /// in scope for this error type, 0 otherwise.
    #[inline]
    pub fn selector(self, y: i8) -> f64 {
        match self {
            MistreatmentKind::Omr => 1.0,
            MistreatmentKind::Fpr => f64::from(y == -1),
            MistreatmentKind::Fnr => f64::from(y == 1),
        }
    }
}

impl std::fmt::Display for MistreatmentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MistreatmentKind::Omr => "omr",
            MistreatmentKind::Fpr => "fpr",
            MistreatmentKind::Fnr => "fnr",
        })
    }
}

impl std::str::FromStr for MistreatmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "omr" => Ok(MistreatmentKind::Omr),
            "fpr" => Ok(MistreatmentKind::Fpr),
            "fnr" => Ok(MistreatmentKind::Fnr),
            other => Err(Error::InvalidInput(format!("unknown mistreatment kind {other:?}"))),
        }
    }
}

/// Covariance bound for one constrained kind: either an absolute threshold
/// c ≥ 0, or a multiplier m in [0, 1] resolved against the unconstrained
/// boundary's covariance magnitude c* (c = m·c*).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdSpec {
    Absolute(f64),
    Multiplier(f64),
}

/// The set of mistreatment constraints for one training run. Constraining
/// both FPR and FNR materializes two independent constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    constraints: Vec<(MistreatmentKind, ThresholdSpec)>,
}

impl ConstraintSpec {
    pub fn new(constraints: Vec<(MistreatmentKind, ThresholdSpec)>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::InvalidInput("constraint spec must name at least one kind".into()));
        }
        for (i, (kind, spec)) in constraints.iter().enumerate() {
            if constraints[..i].iter().any(|(k, _)| k == kind) {
                return Err(Error::InvalidInput(format!("kind {kind} listed twice")));
            }
            match spec {
                ThresholdSpec::Absolute(c) if !(*c >= 0.0) => {
                    return Err(Error::InvalidInput(format!(
                        "threshold c={c} must be nonnegative"
                    )));
                }
                ThresholdSpec::Multiplier(m) if !(0.0..=1.0).contains(m) => {
                    return Err(Error::InvalidInput(format!("multiplier m={m} must lie in [0,1]")));
                }
                _ => {}
            }
        }
        Ok(Self { constraints })
    }

    /// Every listed kind at the same multiplier m.
    pub fn with_multiplier(kinds: &[MistreatmentKind], m: f64) -> Result<Self> {
        Self::new(kinds.iter().map(|&k| (k, ThresholdSpec::Multiplier(m))).collect())
    }

    /// Every listed kind at the same absolute threshold c.
    pub fn with_threshold(kinds: &[MistreatmentKind], c: f64) -> Result<Self> {
        Self::new(kinds.iter().map(|&k| (k, ThresholdSpec::Absolute(c))).collect())
    }

    pub fn items(&self) -> &[(MistreatmentKind, ThresholdSpec)] {
        &self.constraints
    }

    pub fn kinds(&self) -> Vec<MistreatmentKind> {
        self.constraints.iter().map(|(k, _)| *k).collect()
    }
}

/// g(y, x) = min(0, selector·y·θᵀx̃): 0 for in-scope correctly classified
/// points and for out-of-scope labels, negative otherwise.
pub fn g_value(kind: MistreatmentKind, y: i8, x: &[f64], b: &Boundary) -> Result<f64> {
    if y != 1 && y != -1 {
        return Err(Error::InvalidInput(format!("label {y} is not in {{-1,+1}}")));
    }
    let d = b.signed_distance(x)?;
    Ok(g_exact(kind.selector(y) * y as f64 * d))
}

#[inline]
pub(crate) fn g_exact(t: f64) -> f64 {
    t.min(0.0)
}

fn check(data: &Dataset, b: &Boundary) -> Result<()> {
    if b.input_dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim() + 1, got: b.theta().len() });
    }
    Ok(())
}

fn require_both_groups(data: &Dataset) -> Result<()> {
    let has0 = data.sensitive().contains(&0);
    let has1 = data.sensitive().contains(&1);
    match (has0, has1) {
        (true, true) => Ok(()),
        (true, false) => Err(Error::SingleGroup(0)),
        _ => Err(Error::SingleGroup(1)),
    }
}

fn covariance_impl(kind: MistreatmentKind, data: &Dataset, b: &Boundary, parallel: bool) -> f64 {
    let n = data.n() as f64;
    let zbar = data.sensitive().iter().map(|&z| z as f64).sum::<f64>() / n;
    let map = |range: std::ops::Range<usize>| {
        let mut acc = 0.0;
        for i in range {
            let t = data.label(i) as f64 * b.signed_distance_unchecked(data.row(i));
            acc += (data.z(i) as f64 - zbar) * g_exact(kind.selector(data.label(i)) * t);
        }
        acc
    };
    let sum = if parallel {
        exec::fold_chunks(data.n(), 0.0, map, |a, b| a + b)
    } else {
        exec::fold_chunks_seq(data.n(), 0.0, map, |a, b| a + b)
    };
    sum / n
}

/// Empirical covariance (1/N) Σ (z − z̄)·g(y, x) at the given boundary.
/// Requires both sensitive groups to be present.
pub fn covariance(kind: MistreatmentKind, data: &Dataset, b: &Boundary) -> Result<f64> {
    check(data, b)?;
    require_both_groups(data)?;
    Ok(covariance_impl(kind, data, b, true))
}

/// Sequential reference path for [`covariance`]; bit-identical, kept public
/// for parity tests and benches.
pub fn covariance_seq(kind: MistreatmentKind, data: &Dataset, b: &Boundary) -> Result<f64> {
    check(data, b)?;
    require_both_groups(data)?;
    Ok(covariance_impl(kind, data, b, false))
}

/// Raw per-group sums (S₀, S₁) of g over the z=0 and z=1 rows. They relate to
/// [`covariance`] through the exact identity (−n₁·S₀ + n₀·S₁)/N² = cov.
pub fn dc_group_sums(
    kind: MistreatmentKind,
    data: &Dataset,
    partition: &GroupPartition,
    b: &Boundary,
) -> Result<(f64, f64)> {
    check(data, b)?;
    require_both_groups(data)?;
    if partition.n0 + partition.n1 != data.n() {
        return Err(Error::InvalidInput("partition does not match dataset".into()));
    }
    let map = |range: std::ops::Range<usize>| {
        let mut s = (0.0, 0.0);
        for i in range {
            let t = data.label(i) as f64 * b.signed_distance_unchecked(data.row(i));
            let g = g_exact(kind.selector(data.label(i)) * t);
            if data.z(i) == 0 {
                s.0 += g;
            } else {
                s.1 += g;
            }
        }
        s
    };
    Ok(exec::fold_chunks(data.n(), (0.0, 0.0), map, |a, b| (a.0 + b.0, a.1 + b.1)))
}

/// Subgradients of the raw group sums (S₀, S₁) from [`dc_group_sums`], with
/// the zero branch chosen at kinks. These are the pieces the convex-concave
/// trainer linearizes.
pub fn dc_group_subgradients(
    kind: MistreatmentKind,
    data: &Dataset,
    partition: &GroupPartition,
    b: &Boundary,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check(data, b)?;
    require_both_groups(data)?;
    if partition.n0 + partition.n1 != data.n() {
        return Err(Error::InvalidInput("partition does not match dataset".into()));
    }
    let dim = data.dim() + 1;
    let map = |range: std::ops::Range<usize>| {
        let mut grads = (vec![0.0; dim], vec![0.0; dim]);
        for i in range {
            let y = data.label(i) as f64;
            let sel = kind.selector(data.label(i));
            if sel == 0.0 {
                continue;
            }
            let x = data.row(i);
            if y * b.signed_distance_unchecked(x) < 0.0 {
                let g = if data.z(i) == 0 { &mut grads.0 } else { &mut grads.1 };
                for (gj, v) in g[..x.len()].iter_mut().zip(x) {
                    *gj += sel * y * v;
                }
                g[x.len()] += sel * y;
            }
        }
        grads
    };
    Ok(exec::fold_chunks(data.n(), (vec![0.0; dim], vec![0.0; dim]), map, |mut a, b| {
        exec::add_assign(&mut a.0, &b.0);
        exec::add_assign(&mut a.1, &b.1);
        a
    }))
}

/// A subgradient of the covariance at θ. At kink points (y·d = 0) the zero
/// branch is chosen, so perfectly fair boundaries stay stationary.
pub fn constraint_subgradient(
    kind: MistreatmentKind,
    data: &Dataset,
    partition: &GroupPartition,
    b: &Boundary,
) -> Result<Vec<f64>> {
    check(data, b)?;
    require_both_groups(data)?;
    let n = data.n() as f64;
    let dim = data.dim() + 1;
    let (w0, w1) = (-(partition.n1 as f64) / (n * n), partition.n0 as f64 / (n * n));
    let map = |range: std::ops::Range<usize>| {
        let mut grad = vec![0.0; dim];
        for i in range {
            let y = data.label(i) as f64;
            let sel = kind.selector(data.label(i));
            if sel == 0.0 {
                continue;
            }
            let x = data.row(i);
            let t = y * b.signed_distance_unchecked(x);
            if t < 0.0 {
                let w = if data.z(i) == 0 { w0 } else { w1 };
                let coef = w * sel * y;
                for (g, v) in grad[..x.len()].iter_mut().zip(x) {
                    *g += coef * v;
                }
                grad[x.len()] += coef;
            }
        }
        grad
    };
    Ok(exec::fold_chunks(data.n(), vec![0.0; dim], map, |mut a, b| {
        exec::add_assign(&mut a, &b);
        a
    }))
}
