//! Labeled multivariate time-series datasets.
//!
//! An instance is a `D x T` matrix stored as one row per dimension. A dataset
//! pairs instances with class labels; every instance shares the same shape.

mod io;
mod scale;
mod split;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use io::{load_dataset, save_dataset, DatasetSchema};
pub use scale::{minmax_rescale, znormalize, znormalize_into, DimensionRange};
pub use split::{stratified_train_counts, train_test_split};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no dimension files (dim_<k>.csv) found in {0}")]
    NoDimensions(String),
    #[error("missing dimension file {0}")]
    MissingDimension(String),
    #[error("{file}: row {row} has {found} columns, expected {expected}")]
    RaggedRow {
        file: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{file}: row {row}, column {col}: cannot parse {cell:?} as a number")]
    NonNumeric {
        file: String,
        row: usize,
        col: usize,
        cell: String,
    },
    #[error("{file}: row {row}, column {col}: value is not finite")]
    NonFinite { file: String, row: usize, col: usize },
    #[error("{file}: {found} rows, expected {expected}")]
    RowCountMismatch {
        file: String,
        expected: usize,
        found: usize,
    },
    #[error("labels.csv has {labels} labels but dimension files have {rows} rows")]
    LabelCountMismatch { labels: usize, rows: usize },
    #[error("labels.csv: row {0} is empty")]
    EmptyLabel(usize),
    #[error("instance {id}: {reason}")]
    InvalidInstance { id: usize, reason: String },
    #[error("dataset needs at least 2 instances, got {0}")]
    TooFewInstances(usize),
    #[error("instance {id} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        id: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{instances} instances but {labels} labels")]
    LengthMismatch { instances: usize, labels: usize },
    #[error("class {class} has {count} member(s); stratified split needs at least 2")]
    Stratification { class: Label, count: usize },
    #[error("train fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
}

/// Class identifier. Ordered lexicographically, which fixes every tie-break
/// that depends on class order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(String);

impl Label {
    pub fn new(s: impl Into<String>) -> Self {
        Label(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label(s.to_owned())
    }
}

impl From<String> for Label {
    fn from(s: String) -> Self {
        Label(s)
    }
}

/// One multivariate series: `values[d][t]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtsInstance<F> {
    pub id: usize,
    values: Vec<Vec<F>>,
}

impl<F: Scalar> MtsInstance<F> {
    /// Builds an instance, checking the shape (`D >= 1`, equal lengths
    /// `T >= 2`) and that every value is finite.
    pub fn new(id: usize, values: Vec<Vec<F>>) -> Result<Self, DatasetError> {
        let invalid = |reason: String| DatasetError::InvalidInstance { id, reason };
        let Some(first) = values.first() else {
            return Err(invalid("no dimensions".into()));
        };
        let len = first.len();
        if len < 2 {
            return Err(invalid(format!("series length {len} < 2")));
        }
        for (d, row) in values.iter().enumerate() {
            if row.len() != len {
                return Err(invalid(format!(
                    "dimension {d} has length {}, expected {len}",
                    row.len()
                )));
            }
            if let Some(t) = row.iter().position(|v| !v.is_finite()) {
                return Err(invalid(format!("non-finite value at dimension {d}, step {t}")));
            }
        }
        Ok(MtsInstance { id, values })
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn len(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.dims(), self.len())
    }

    pub fn dim(&self, d: usize) -> &[F] {
        &self.values[d]
    }

    pub fn values(&self) -> &[Vec<F>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Vec<F>> {
        self.values
    }

    /// Row-major (dimension, then time) concatenation into a `D*T` vector.
    pub fn flatten(&self) -> Vec<F> {
        self.values.iter().flatten().copied().collect()
    }

    /// Same id, new values of the same shape.
    pub fn with_values(&self, values: Vec<Vec<F>>) -> Result<Self, DatasetError> {
        let inst = MtsInstance::new(self.id, values)?;
        if inst.shape() != self.shape() {
            return Err(DatasetError::ShapeMismatch {
                id: self.id,
                expected: self.shape(),
                found: inst.shape(),
            });
        }
        Ok(inst)
    }
}

/// Equal-shape labeled instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtsDataset<F> {
    instances: Vec<MtsInstance<F>>,
    labels: Vec<Label>,
}

impl<F: Scalar> MtsDataset<F> {
    pub fn new(instances: Vec<MtsInstance<F>>, labels: Vec<Label>) -> Result<Self, DatasetError> {
        if instances.len() != labels.len() {
            return Err(DatasetError::LengthMismatch {
                instances: instances.len(),
                labels: labels.len(),
            });
        }
        if instances.len() < 2 {
            return Err(DatasetError::TooFewInstances(instances.len()));
        }
        let expected = instances[0].shape();
        for inst in &instances {
            if inst.shape() != expected {
                return Err(DatasetError::ShapeMismatch {
                    id: inst.id,
                    expected,
                    found: inst.shape(),
                });
            }
        }
        Ok(MtsDataset { instances, labels })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.instances[0].dims()
    }

    pub fn series_len(&self) -> usize {
        self.instances[0].len()
    }

    pub fn instances(&self) -> &[MtsInstance<F>] {
        &self.instances
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn instance(&self, i: usize) -> &MtsInstance<F> {
        &self.instances[i]
    }

    pub fn label(&self, i: usize) -> &Label {
        &self.labels[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MtsInstance<F>, &Label)> {
        self.instances.iter().zip(&self.labels)
    }

    /// Distinct labels in ascending order.
    pub fn class_set(&self) -> Vec<Label> {
        self.class_counts().into_keys().collect()
    }

    pub fn class_counts(&self) -> BTreeMap<Label, usize> {
        let mut counts = BTreeMap::new();
        for l in &self.labels {
            *counts.entry(l.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Looks an instance up by its id.
    pub fn find(&self, id: usize) -> Option<(&MtsInstance<F>, &Label)> {
        self.iter().find(|(inst, _)| inst.id == id)
    }

    /// Positions of instances with the given label.
    pub fn indices_of(&self, class: &Label) -> Vec<usize> {
        (0..self.len()).filter(|&i| &self.labels[i] == class).collect()
    }

    /// Subset by positions; instance ids are kept.
    pub fn select(&self, positions: &[usize]) -> Result<Self, DatasetError> {
        let instances = positions.iter().map(|&i| self.instances[i].clone()).collect();
        let labels = positions.iter().map(|&i| self.labels[i].clone()).collect();
        MtsDataset::new(instances, labels)
    }
}
