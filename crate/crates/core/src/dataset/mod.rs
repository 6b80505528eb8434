//! Labeled feature-vector datasets.
//!
//! A [`FeatureDataset`] is an `n × D` matrix of finite features plus one class
//! index per row. Values are held as `f64` in memory; the on-disk formats in
//! [`format`] store them as `f32`, so anything produced by loading or by
//! [`synthesize_blobs`] round-trips through the binary format exactly.

mod format;
mod normalize;
mod split;
mod synth;

use std::path::PathBuf;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{binary_header_len, load_dataset, save_dataset, FileFormat, FORMAT_VERSION, MAGIC};
pub use normalize::{normalize_features, NormalizeMode, Scaler};
pub use split::{split, DatasetSplit, SplitRatios};
pub use synth::{synthesize_blobs, BlobSpec};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic bytes {found:?}, expected \"LYMF\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("file ends inside record {record}")]
    Truncated { record: usize },
    #[error("record {record}: expected {expected} features, found {found}")]
    DimensionMismatch { record: usize, expected: usize, found: usize },
    #[error("record {record}: label {label} is not below the class count {classes}")]
    LabelOutOfRange { record: usize, label: usize, classes: usize },
    #[error("record {record}: non-finite value in feature {feature}")]
    NonFinite { record: usize, feature: usize },
    #[error("record {record}: {message}")]
    Parse { record: usize, message: String },
    #[error("dataset has no records")]
    Empty,
    #[error("invalid class list: {0}")]
    InvalidClasses(String),
    #[error("split part '{part}' would be empty although its ratio is positive")]
    EmptySplitPart { part: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = DatasetError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassLabel {
    pub index: usize,
    pub name: String,
}

/// One owned row, used when assembling a dataset record by record.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub features: Vec<f64>,
    pub label: usize,
}

/// Class names used when a file carries none: alphabetical lymphoma subtypes
/// for three classes, `class{i}` otherwise.
pub fn default_class_names(k: usize) -> Vec<String> {
    if k == 3 {
        ["CLL", "FL", "MCL"].iter().map(|s| s.to_string()).collect()
    } else {
        (0..k).map(|i| format!("class{i}")).collect()
    }
}

pub(crate) fn labels_from_names(names: &[String]) -> Result<Vec<ClassLabel>> {
    if names.is_empty() {
        return Err(DatasetError::InvalidClasses("no classes".into()));
    }
    for (i, a) in names.iter().enumerate() {
        if names[..i].contains(a) {
            return Err(DatasetError::InvalidClasses(format!("duplicate class name '{a}'")));
        }
    }
    Ok(names.iter().enumerate().map(|(index, name)| ClassLabel { index, name: name.clone() }).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    classes: Vec<ClassLabel>,
    provenance: String,
}

impl FeatureDataset {
    /// Builds a validated dataset. Empty datasets are allowed here (split
    /// parts may be empty); loaders reject them separately.
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        class_names: &[String],
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let classes = labels_from_names(class_names)?;
        if features.nrows() != labels.len() {
            return Err(DatasetError::InvalidArgument(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        let k = classes.len();
        for (record, (row, &label)) in features.outer_iter().zip(&labels).enumerate() {
            if label >= k {
                return Err(DatasetError::LabelOutOfRange { record, label, classes: k });
            }
            if let Some(feature) = row.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite { record, feature });
            }
        }
        Ok(Self {
            features: features.as_standard_layout().into_owned(),
            labels,
            classes,
            provenance: provenance.into(),
        })
    }

    pub fn from_records(
        records: &[FeatureRecord],
        dim: usize,
        class_names: &[String],
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let mut features = Array2::zeros((records.len(), dim));
        for (i, r) in records.iter().enumerate() {
            if r.features.len() != dim {
                return Err(DatasetError::DimensionMismatch { record: i, expected: dim, found: r.features.len() });
            }
            features.row_mut(i).iter_mut().zip(&r.features).for_each(|(d, s)| *d = *s);
        }
        let labels = records.iter().map(|r| r.label).collect();
        Self::new(features, labels, class_names, provenance)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> &[ClassLabel] {
        &self.classes
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn record(&self, i: usize) -> (ArrayView1<'_, f64>, usize) {
        (self.features.row(i), self.labels[i])
    }

    pub fn records(&self) -> Vec<FeatureRecord> {
        self.features
            .outer_iter()
            .zip(&self.labels)
            .map(|(row, &label)| FeatureRecord { features: row.to_vec(), label })
            .collect()
    }

    /// Records per class index.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// New dataset holding the given rows in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub(crate) fn with_features(&self, features: Array2<f64>) -> Self {
        debug_assert_eq!(features.dim(), self.features.dim());
        Self {
            features,
            labels: self.labels.clone(),
            classes: self.classes.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn names(k: usize) -> Vec<String> {
        default_class_names(k)
    }

    #[test]
    fn rejects_label_out_of_range() {
        let err = FeatureDataset::new(array![[1.0], [2.0]], vec![0, 3], &names(3), "t").unwrap_err();
        assert!(matches!(err, DatasetError::LabelOutOfRange { record: 1, label: 3, .. }));
    }

    #[test]
    fn rejects_non_finite() {
        let err = FeatureDataset::new(array![[1.0, f64::INFINITY]], vec![0], &names(3), "t").unwrap_err();
        assert!(matches!(err, DatasetError::NonFinite { record: 0, feature: 1 }));
    }

    #[test]
    fn rejects_duplicate_class_names() {
        let dup = vec!["A".to_string(), "A".to_string()];
        assert!(FeatureDataset::new(array![[1.0]], vec![0], &dup, "t").is_err());
    }

    #[test]
    fn default_names_are_alphabetical_subtypes() {
        assert_eq!(default_class_names(3), vec!["CLL", "FL", "MCL"]);
        assert_eq!(default_class_names(2), vec!["class0", "class1"]);
    }

    #[test]
    fn select_keeps_order() {
        let d = FeatureDataset::new(array![[1.0], [2.0], [3.0]], vec![0, 1, 2], &names(3), "t").unwrap();
        let s = d.select(&[2, 0]);
        assert_eq!(s.labels(), &[2, 0]);
        assert_eq!(s.features()[[0, 0]], 3.0);
    }
}
