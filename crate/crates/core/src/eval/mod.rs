//! Counterfactual quality measures: proximity, sparsity and plausibility,
//! plus a whole-dimension substitution baseline for comparison.

mod baseline;
mod iforest;
mod lof;
mod matrix_profile;
mod ocsvm;
mod plausibility;
mod proximity;
mod report;

use thiserror::Error;

use crate::blackbox::ModelError;
use crate::cfgen::EngineError;
use crate::dataset::DatasetError;

pub use baseline::baseline_dim_substitution;
pub use iforest::{average_path_length, IsoNode, IsoTree, IsolationForest};
pub use lof::LocalOutlierFactor;
pub use matrix_profile::matrix_profile;
pub use ocsvm::{Gamma, OneClassSvm, SvmOptions};
pub use plausibility::{DetectorConfig, DetectorVerdict, Detectors, PlausibilityResult};
pub use proximity::{proximity, sparsity, ProximityResult};
pub use report::{
    build_report, evaluate_counterfactual, format_tables, write_csv, Aggregates, EvaluationReport,
    EvaluationRow, Summary,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("series of length {len} too short for window {m} (need 2 <= m <= len / 2)")]
    SeriesTooShort { len: usize, m: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("one-class SVM did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("cannot build a report from zero rows")]
    EmptyReport,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn shape<F>(m: &[Vec<F>]) -> (usize, usize) {
    (m.len(), m.first().map_or(0, Vec::len))
}

fn check_same_shape<F>(a: &[Vec<F>], b: &[Vec<F>]) -> Result<(), EvalError> {
    let (sa, sb) = (shape(a), shape(b));
    if sa != sb || a.iter().zip(b).any(|(x, y)| x.len() != y.len()) {
        return Err(EvalError::ShapeMismatch(sa, sb));
    }
    Ok(())
}
