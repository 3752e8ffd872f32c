//! Pipeline driver behind the `shapecf` binary: mine class-shapelets,
//! generate counterfactuals for a held-out split, and evaluate them. Every
//! artifact lands in a run directory named after the config hash.

mod config;
mod pipeline;

use thiserror::Error;

use shapecf_core::blackbox::ModelError;
use shapecf_core::cfgen::EngineError;
use shapecf_core::dataset::DatasetError;
use shapecf_core::eval::EvalError;
use shapecf_core::mining::MiningError;

pub use config::{DatasetSection, EvalSection, OutputSection, Overrides, RunConfig, SplitSection};
pub use pipeline::{
    cmd_evaluate, cmd_explain, cmd_mine, explain_queries, run, ExplainSummary, QueryResult,
    RunArtifacts, COUNTERFACTUALS_FILE, MINING_LOG_FILE, PARTIAL_FILE, REPORT_CSV_FILE,
    REPORT_JSON_FILE, SHAPELETS_FILE,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("no class-shapelets survived mining; nothing to explain with")]
    EmptyStore,
    #[error("model unavailable: {0}")]
    ModelUnavailable(ModelError),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("{0}")]
    Other(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 2 config, 3 data, 4 empty store, 5 model
    /// unavailable, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::MissingInput(_) => 3,
            CliError::EmptyStore => 4,
            CliError::ModelUnavailable(_) => 5,
            CliError::Other(_) | CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        if e.is_unavailable() {
            CliError::ModelUnavailable(e)
        } else {
            CliError::Other(e.to_string())
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::EmptyStore => CliError::EmptyStore,
            EngineError::Model(m) => m.into(),
            EngineError::Dataset(d) => d.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<MiningError> for CliError {
    fn from(e: MiningError) -> Self {
        match e {
            MiningError::InvalidConfig(m) => CliError::Config(m),
            e @ (MiningError::TooFewClasses(_) | MiningError::InvalidStore(_)) => CliError::Data(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(m) => m.into(),
            EvalError::Engine(m) => m.into(),
            EvalError::Dataset(d) => d.into(),
            EvalError::InvalidParam(m) => CliError::Config(m),
            other => CliError::Other(other.to_string()),
        }
    }
}
