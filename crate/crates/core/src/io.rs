//! CSV ingestion with declarative schemas, categorical one-hot encoding,
//! sensitive-column routing, and repeated train/test split plans.
//!
//! The schema names the label column (with the raw value mapped to +1), the
//! sensitive column (with the raw value mapped to z=0), and the feature
//! columns with their kinds. Categorical features are one-hot encoded over
//! all observed categories in lexicographic order, so the encoding is a
//! deterministic function of file content and schema. Optional row filters
//! keep only rows whose column value is on a keep-list.

use std::collections::BTreeSet;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Keep only rows whose `column` value appears in `keep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFilter {
    pub column: String,
    pub keep: Vec<String>,
}

/// Declarative description of how a CSV file maps onto a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    pub label_column: String,
    /// Raw label value mapped to +1; the single remaining value maps to −1.
    pub positive_value: String,
    pub sensitive_column: String,
    /// Raw sensitive value mapped to z=0; the single remaining value is z=1.
    pub z0_value: String,
    pub feature_columns: Vec<ColumnSpec>,
    /// Allow the sensitive column among the features (or, when it is not
    /// listed there, append z itself as a numeric feature). Leaving this off
    /// keeps decisions free of the sensitive attribute.
    #[serde(default)]
    pub include_sensitive_as_feature: bool,
    #[serde(default)]
    pub row_filters: Vec<RowFilter>,
}

impl SchemaConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let schema: SchemaConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("schema {}: {e}", path.display())))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_columns.is_empty() {
            return Err(Error::Data("schema lists no feature columns".into()));
        }
        for (i, c) in self.feature_columns.iter().enumerate() {
            if self.feature_columns[..i].iter().any(|p| p.name == c.name) {
                return Err(Error::Data(format!("feature column {:?} listed twice", c.name)));
            }
        }
        if self.feature_columns.iter().any(|c| c.name == self.label_column) {
            return Err(Error::Data("label column cannot be a feature".into()));
        }
        let sensitive_in_features =
            self.feature_columns.iter().any(|c| c.name == self.sensitive_column);
        if sensitive_in_features && !self.include_sensitive_as_feature {
            return Err(Error::Data(
                "sensitive column is listed as a feature but include_sensitive_as_feature is off"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Two-value mapping for the label / sensitive columns: the configured value
/// plus the single other value observed in the file.
struct BinaryColumn {
    configured: String,
    other: Option<String>,
    what: &'static str,
}

impl BinaryColumn {
    fn new(configured: &str, what: &'static str) -> Self {
        Self { configured: configured.to_string(), other: None, what }
    }

    fn classify(&mut self, value: &str, line: u64) -> Result<bool> {
        if value == self.configured {
            return Ok(true);
        }
        match &self.other {
            None => {
                self.other = Some(value.to_string());
                Ok(false)
            }
            Some(o) if o == value => Ok(false),
            Some(o) => Err(Error::Data(format!(
                "line {line}: {} column has a third value {value:?} (seen {:?} and {o:?})",
                self.what, self.configured
            ))),
        }
    }
}

/// Load a CSV file through a schema. Categorical features one-hot encode over
/// the observed categories in lexicographic order; feature names come out as
/// `column` for numeric and `column=category` for one-hot columns.
pub fn load_csv(path: &Path, schema: &SchemaConfig) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("missing column {name:?} in {}", path.display())))
    };

    let label_ix = col(&schema.label_column)?;
    let sensitive_ix = col(&schema.sensitive_column)?;
    let feature_ix: Vec<usize> =
        schema.feature_columns.iter().map(|c| col(&c.name)).collect::<Result<_>>()?;
    let filter_ix: Vec<usize> =
        schema.row_filters.iter().map(|f| col(&f.column)).collect::<Result<_>>()?;

    // pass 1: collect rows that pass the filters, with their line numbers
    let mut rows: Vec<(u64, csv::StringRecord)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let keep = schema
            .row_filters
            .iter()
            .zip(&filter_ix)
            .all(|(f, &ix)| f.keep.iter().any(|v| v == &record[ix]));
        if keep {
            rows.push((line, record));
        }
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no rows left after filters", path.display())));
    }

    // observed categories per categorical feature column, lexicographic
    let categories: Vec<Option<BTreeSet<String>>> = schema
        .feature_columns
        .iter()
        .zip(&feature_ix)
        .map(|(c, &ix)| match c.kind {
            ColumnKind::Numeric => None,
            ColumnKind::Categorical => Some(rows.iter().map(|(_, r)| r[ix].to_string()).collect()),
        })
        .collect();

    let mut feature_names: Vec<String> = Vec::new();
    for (c, cats) in schema.feature_columns.iter().zip(&categories) {
        match cats {
            None => feature_names.push(c.name.clone()),
            Some(set) => {
                feature_names.extend(set.iter().map(|cat| format!("{}={cat}", c.name)));
            }
        }
    }
    let append_z = schema.include_sensitive_as_feature
        && !schema.feature_columns.iter().any(|c| c.name == schema.sensitive_column);
    if append_z {
        feature_names.push("z".into());
    }
    let d = feature_names.len();

    // pass 2: encode
    let mut label_map = BinaryColumn::new(&schema.positive_value, "label");
    let mut sensitive_map = BinaryColumn::new(&schema.z0_value, "sensitive");
    let mut features = Vec::with_capacity(rows.len() * d);
    let mut labels = Vec::with_capacity(rows.len());
    let mut sensitive = Vec::with_capacity(rows.len());
    for (line, record) in &rows {
        labels.push(if label_map.classify(&record[label_ix], *line)? { 1 } else { -1 });
        let z = u8::from(!sensitive_map.classify(&record[sensitive_ix], *line)?);
        sensitive.push(z);
        for ((c, cats), &ix) in schema.feature_columns.iter().zip(&categories).zip(&feature_ix) {
            let cell = &record[ix];
            match cats {
                None => features.push(cell.trim().parse::<f64>().map_err(|_| {
                    Error::Data(format!(
                        "line {line}: non-numeric value {cell:?} in numeric column {:?}",
                        c.name
                    ))
                })?),
                Some(set) => {
                    for cat in set {
                        features.push(f64::from(cat == cell));
                    }
                }
            }
        }
        if append_z {
            features.push(f64::from(z));
        }
    }

    Dataset::new(features, rows.len(), d, labels, sensitive, feature_names)
}

/// Write a dataset as CSV: encoded feature columns, then `z`, then `y`
/// (as −1/1). Floats print in shortest round-trip form, so a reload
/// reproduces the matrix exactly.
pub fn write_csv(path: &Path, data: &Dataset) -> Result<()> {
    for reserved in ["z", "y"] {
        if data.feature_names().iter().any(|n| n == reserved) {
            return Err(Error::Data(format!(
                "feature name {reserved:?} collides with a reserved output column"
            )));
        }
    }
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = data.feature_names().iter().map(|s| s.as_str()).collect();
    header.push("z");
    header.push("y");
    writer.write_record(&header)?;
    for i in 0..data.n() {
        // f64 Display prints the shortest representation that parses back
        // to the same value, which is what makes the round trip exact.
        let mut record: Vec<String> = data.row(i).iter().map(|v| format!("{v}")).collect();
        record.push(data.z(i).to_string());
        record.push(data.label(i).to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Repeated train/test split plan: `repetitions` seeded permutations, each
/// cut at ⌊N·train_fraction⌋.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub repetitions: usize,
    pub train_fraction: f64,
    pub base_seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self { repetitions: 5, train_fraction: 0.5, base_seed: 0 }
    }
}

/// Produce the (train indices, test indices) pairs of a plan. Repetition r
/// shuffles with seed `base_seed + r`; train and test are disjoint and cover
/// all rows.
pub fn make_splits(data: &Dataset, plan: &SplitPlan) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if plan.repetitions == 0 {
        return Err(Error::InvalidInput("repetitions must be at least 1".into()));
    }
    if !(plan.train_fraction > 0.0 && plan.train_fraction < 1.0) {
        return Err(Error::InvalidInput("train_fraction must lie in (0,1)".into()));
    }
    let n = data.n();
    let cut = (n as f64 * plan.train_fraction).floor() as usize;
    if cut == 0 || cut == n {
        return Err(Error::InvalidInput(format!("degenerate split: {cut} train rows out of {n}")));
    }
    Ok((0..plan.repetitions)
        .map(|r| {
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(plan.base_seed + r as u64);
            order.shuffle(&mut rng);
            let test = order.split_off(cut);
            (order, test)
        })
        .collect())
}
