//! Core immutable data containers: feature matrix with labels and a binary
//! sensitive attribute, plus the group partition used by the constraint
//! machinery.
//!
//! Labels live in {−1, +1} and the sensitive attribute in {0, 1}. Both are
//! validated at construction; everything downstream relies on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable classification dataset: an N×d feature matrix (row-major),
/// labels in {−1, +1} and a binary sensitive attribute in {0, 1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    n: usize,
    d: usize,
    labels: Vec<i8>,
    sensitive: Vec<u8>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        n: usize,
        d: usize,
        labels: Vec<i8>,
        sensitive: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dataset must have at least one row".into()));
        }
        if features.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: features.len() });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
        }
        if sensitive.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sensitive.len() });
        }
        if feature_names.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: feature_names.len() });
        }
        if let Some(y) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(Error::InvalidInput(format!("label {y} is not in {{-1,+1}}")));
        }
        if let Some(z) = sensitive.iter().find(|&&z| z > 1) {
            return Err(Error::InvalidInput(format!("sensitive value {z} is not in {{0,1}}")));
        }
        if !features.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("features must be finite".into()));
        }
        for (i, a) in feature_names.iter().enumerate() {
            if feature_names[..i].contains(a) {
                return Err(Error::InvalidInput(format!("duplicate feature name {a:?}")));
            }
        }
        Ok(Self { features, n, d, labels, sensitive, feature_names })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    /// Label of row `i`, in {−1, +1}.
    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    /// Sensitive attribute of row `i`, in {0, 1}.
    pub fn z(&self, i: usize) -> u8 {
        self.sensitive[i]
    }

    pub fn sensitive(&self) -> &[u8] {
        &self.sensitive
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// New dataset holding the selected rows (in the given order).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        let mut sensitive = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidInput(format!("row index {i} out of range")));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
            sensitive.push(self.sensitive[i]);
        }
        Self::new(features, indices.len(), self.d, labels, sensitive, self.feature_names.clone())
    }
}

/// Index partition of a dataset by sensitive value, with the group counts
/// and the mean of z. `zbar == n1 / (n0 + n1)` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    pub indices_z0: Vec<usize>,
    pub indices_z1: Vec<usize>,
    pub n0: usize,
    pub n1: usize,
    pub zbar: f64,
}

/// Split row indices by sensitive value. An empty group is allowed here;
/// the constraint modules reject single-group data themselves.
pub fn partition_by_sensitive(data: &Dataset) -> GroupPartition {
    let mut indices_z0 = Vec::new();
    let mut indices_z1 = Vec::new();
    for i in 0..data.n() {
        if data.z(i) == 0 {
            indices_z0.push(i);
        } else {
            indices_z1.push(i);
        }
    }
    let (n0, n1) = (indices_z0.len(), indices_z1.len());
    GroupPartition { indices_z0, indices_z1, n0, n1, zbar: n1 as f64 / (n0 + n1) as f64 }
}
