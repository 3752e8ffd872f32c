//! The classifier boundary. Explanations only ever call
//! [`Classifier::predict`]; nothing inspects model internals.

mod external;
mod knn;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Label, MtsDataset, MtsInstance};
use crate::scalar::Scalar;

pub use external::{encode_request, ExternalModel, PredictRequest, PredictResponse};
pub use knn::KnnClassifier;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to start model process {program}: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model process exited or closed its output: {0}")]
    Crashed(String),
    #[error("model did not answer within {0:.1} s")]
    Timeout(f64),
    #[error("malformed model response: {0}")]
    Malformed(String),
    #[error("instance shape {found:?} does not match model shape {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("k must be in 1..={n}, got {k}")]
    InvalidK { k: usize, n: usize },
    #[error("model needs a non-empty training set")]
    EmptyTraining,
}

impl ModelError {
    /// Stable short code, one per failure kind.
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::Spawn { .. } => "model-spawn",
            ModelError::Crashed(_) => "model-crashed",
            ModelError::Timeout(_) => "model-timeout",
            ModelError::Malformed(_) => "model-malformed",
            ModelError::ShapeMismatch { .. } => "shape-mismatch",
            ModelError::InvalidK { .. } => "invalid-k",
            ModelError::EmptyTraining => "empty-training",
        }
    }

    /// True when the model could not be reached or answered badly, as
    /// opposed to a caller contract violation.
    pub fn is_unavailable(&self) -> bool {
        matches!(
            self,
            ModelError::Spawn { .. }
                | ModelError::Crashed(_)
                | ModelError::Timeout(_)
                | ModelError::Malformed(_)
        )
    }
}

/// Per-class scores of one prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredictionVector<F> {
    scores: BTreeMap<Label, F>,
}

impl<F: Scalar> PredictionVector<F> {
    pub fn new(scores: BTreeMap<Label, F>) -> Self {
        PredictionVector { scores }
    }

    pub fn scores(&self) -> &BTreeMap<Label, F> {
        &self.scores
    }

    pub fn score(&self, class: &Label) -> F {
        self.scores.get(class).copied().unwrap_or(F::neg_infinity())
    }

    /// Highest-scoring class; ties go to the lexicographically smallest.
    pub fn argmax(&self) -> &Label {
        let mut best: Option<(&Label, F)> = None;
        for (label, &s) in &self.scores {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((label, s));
            }
        }
        best.expect("prediction vector has at least one class").0
    }
}

/// A black-box classifier over fixed-shape instances.
pub trait Classifier<F: Scalar>: Send + Sync {
    fn classes(&self) -> &[Label];

    /// `(D, T)` the model was trained on.
    fn shape(&self) -> (usize, usize);

    fn predict(&self, instance: &MtsInstance<F>) -> Result<PredictionVector<F>, ModelError>;

    fn check_shape(&self, instance: &MtsInstance<F>) -> Result<(), ModelError> {
        if instance.shape() != self.shape() {
            return Err(ModelError::ShapeMismatch {
                expected: self.shape(),
                found: instance.shape(),
            });
        }
        Ok(())
    }
}

fn default_timeout() -> f64 {
    30.0
}

/// Declarative description of which model to use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelBinding {
    BuiltinKnn {
        #[serde(default = "one")]
        k: usize,
    },
    ExternalProcess {
        program: PathBuf,
        #[serde(default)]
        args: Vec<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
    },
}

fn one() -> usize {
    1
}

impl Default for ModelBinding {
    fn default() -> Self {
        ModelBinding::BuiltinKnn { k: 1 }
    }
}

impl ModelBinding {
    /// Instantiates the bound model for data shaped like `train`.
    pub fn build<F: Scalar>(
        &self,
        train: &MtsDataset<F>,
    ) -> Result<Box<dyn Classifier<F>>, ModelError> {
        match self {
            ModelBinding::BuiltinKnn { k } => Ok(Box::new(KnnClassifier::fit(train, *k)?)),
            ModelBinding::ExternalProcess {
                program,
                args,
                timeout_secs,
            } => Ok(Box::new(ExternalModel::spawn(
                program,
                args,
                std::time::Duration::from_secs_f64(*timeout_secs),
                train.class_set(),
                (train.dims(), train.series_len()),
            )?)),
        }
    }
}
