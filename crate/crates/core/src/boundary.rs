//! Linear decision boundary over intercept-augmented feature vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter vector of a linear boundary. The last entry is the intercept
/// weight: the signed distance of a d-dimensional point x is θ·[x; 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    theta: Vec<f64>,
}

impl Boundary {
    /// `theta` has d+1 entries (weights then intercept), all finite.
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidInput("theta must be non-empty".into()));
        }
        if !theta.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("boundary parameters must be finite".into()));
        }
        Ok(Self { theta })
    }

    /// Zero boundary for d input features.
    pub fn zeros(d: usize) -> Self {
        Self { theta: vec![0.0; d + 1] }
    }

    /// Hot-path constructor for solver iterates whose finiteness is already
    /// guarded by the solver itself.
    #[inline]
    pub(crate) fn new_unchecked(theta: Vec<f64>) -> Self {
        Self { theta }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Number of input features (excludes the intercept slot).
    pub fn input_dim(&self) -> usize {
        self.theta.len() - 1
    }

    /// Signed distance θ·[x; 1].
    pub fn signed_distance(&self, x: &[f64]) -> Result<f64> {
        if x.len() + 1 != self.theta.len() {
            return Err(Error::DimensionMismatch { expected: self.theta.len() - 1, got: x.len() });
        }
        Ok(self.signed_distance_unchecked(x))
    }

    /// Hot-path variant; caller has already validated dimensions.
    #[inline]
    pub(crate) fn signed_distance_unchecked(&self, x: &[f64]) -> f64 {
        let mut acc = self.theta[x.len()];
        for (t, v) in self.theta[..x.len()].iter().zip(x) {
            acc += t * v;
        }
        acc
    }

    /// Predicted label: +1 iff the signed distance is ≥ 0, else −1.
    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.signed_distance(x)? >= 0.0 { 1 } else { -1 })
    }

    /// Predictions for every row of a dataset.
    pub fn predict_all(&self, data: &crate::dataset::Dataset) -> Result<Vec<i8>> {
        if data.dim() + 1 != self.theta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta.len() - 1,
                got: data.dim(),
            });
        }
        Ok((0..data.n())
            .map(|i| if self.signed_distance_unchecked(data.row(i)) >= 0.0 { 1 } else { -1 })
            .collect())
    }
}
