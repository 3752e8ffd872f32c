//! Contracted shapelet mining: random candidate sampling scored by
//! information gain, occurrence recording, and class-shapelet selection.

mod contracted;
mod distance;
mod gain;
mod store;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contracted::{mine_contracted, CandidateSpec, MiningLog, MiningOutcome};
pub use distance::{sdist, WindowScan};
pub use gain::{entropy, information_gain, Split, GAIN_TIE_EPS};
pub use store::{
    class_filter, find_occurrences, occurrence_distribution, occurrences_in, Occurrence,
    OccurrenceDistribution, Shapelet, ShapeletStore, StoredShapelet, STORE_FORMAT_VERSION,
};

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("shapelet of length {shapelet} is longer than series of length {series}")]
    ShapeletTooLong { shapelet: usize, series: usize },
    #[error("orderline needs >= 2 matching distances and labels, got {distances} and {labels}")]
    OrderlineSize { distances: usize, labels: usize },
    #[error("dimension {dim} out of range for {dims}-dimensional data")]
    DimensionOutOfRange { dim: usize, dims: usize },
    #[error("shapelet {0} has no occurrences")]
    NoOccurrences(usize),
    #[error("mining needs at least 2 classes, found {0}")]
    TooFewClasses(usize),
    #[error("invalid mining configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid shapelet store: {0}")]
    InvalidStore(String),
}

/// How long the contracted search runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Exact number of sampled candidates; reproducible.
    Candidates(usize),
    /// Wall-clock seconds; the candidate count depends on machine speed.
    Seconds(f64),
}

/// Occurrence threshold of a retained shapelet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccThresholdPolicy {
    /// The information-gain split point.
    Split,
    /// Percentile (0..=100) of the shapelet's distances to the training set.
    Percentile(f64),
}

fn default_min_len() -> usize {
    3
}
fn default_true() -> bool {
    true
}
fn default_top_q() -> usize {
    5
}
fn default_policy() -> OccThresholdPolicy {
    OccThresholdPolicy::Split
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiningConfig {
    pub budget: Budget,
    #[serde(default = "default_min_len")]
    pub min_len: usize,
    /// Upper length bound; always capped at `floor(T / 2)`.
    #[serde(default)]
    pub max_len: Option<usize>,
    #[serde(default = "default_true")]
    pub normalize: bool,
    /// Retained candidates per (class, dimension).
    #[serde(default = "default_top_q")]
    pub top_q: usize,
    #[serde(default = "default_policy")]
    pub occ_threshold: OccThresholdPolicy,
    #[serde(default)]
    pub seed: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            budget: Budget::Candidates(2000),
            min_len: default_min_len(),
            max_len: None,
            normalize: true,
            top_q: default_top_q(),
            occ_threshold: OccThresholdPolicy::Split,
            seed: 0,
        }
    }
}

impl MiningConfig {
    /// Effective `(min, max)` candidate length for series of length `t`.
    pub fn length_bounds(&self, t: usize) -> Result<(usize, usize), MiningError> {
        let cap = t / 2;
        let max = self.max_len.map_or(cap, |m| m.min(cap));
        if self.min_len < 3 {
            return Err(MiningError::InvalidConfig(format!(
                "min_len {} is below 3",
                self.min_len
            )));
        }
        if self.min_len > max {
            return Err(MiningError::InvalidConfig(format!(
                "min_len {} exceeds max length {max} for series of length {t}",
                self.min_len
            )));
        }
        Ok((self.min_len, max))
    }

    pub fn validate(&self) -> Result<(), MiningError> {
        if self.top_q == 0 {
            return Err(MiningError::InvalidConfig("top_q must be >= 1".into()));
        }
        if let OccThresholdPolicy::Percentile(p) = self.occ_threshold {
            if !(0.0..=100.0).contains(&p) {
                return Err(MiningError::InvalidConfig(format!("percentile {p} outside [0, 100]")));
            }
        }
        if let Budget::Seconds(s) = self.budget {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(MiningError::InvalidConfig(format!("time budget {s} s")));
            }
        }
        Ok(())
    }
}
