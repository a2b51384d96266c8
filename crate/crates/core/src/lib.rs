//! Training and auditing of binary linear classifiers under group error-rate
//! fairness constraints.
//!
//! The crate covers the full pipeline:
//!
//! - [`dataset`] / [`boundary`]: immutable data containers and the linear
//!   decision boundary.
//! - [`metrics`]: per-group confusion cells, error rates, and disparity
//!   measures (including the disparate-impact gap).
//! - [`logistic`] / [`solver`]: the logistic base learner and a deterministic
//!   L-BFGS minimizer.
//! - [`constraints`]: covariance proxies tying the sensitive attribute to
//!   boundary-distance misclassification measures, with their
//!   difference-of-convex group decomposition.
//! - [`ccp`]: the convex-concave trainer that enforces those covariance
//!   constraints, plus fairness/accuracy trade-off sweeps.
//! - [`baseline`]: the reweighting baseline (up-weight the worse-off group's
//!   misclassified points until the disparity target is met).
//! - [`postprocess`]: group-specific decision thresholds fitted on a scored
//!   validation set (requires the sensitive attribute at decision time).
//! - [`synth`]: seeded bivariate-Gaussian benchmark generators.
//! - [`io`]: CSV ingestion with declarative schemas, one-hot encoding, and
//!   repeated train/test split plans.
//!
//! Built with the default `parallel` feature, sample reductions and job pools
//! run on rayon; the sequential fallback produces bit-identical numbers.

// Validations use `!(x > 0.0)` on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod boundary;
pub mod ccp;
pub mod constraints;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod io;
pub mod logistic;
pub mod metrics;
pub mod postprocess;
pub mod solver;
pub mod synth;

pub use boundary::Boundary;
pub use constraints::{ConstraintSpec, MistreatmentKind, ThresholdSpec};
pub use dataset::{partition_by_sensitive, Dataset, GroupPartition};
pub use error::{Error, Result};
pub use metrics::{disparate_impact_gap, error_report, GroupErrorReport};
