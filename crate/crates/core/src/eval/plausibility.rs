use serde::{Deserialize, Serialize};

use super::{matrix_profile, EvalError, Gamma, IsolationForest, LocalOutlierFactor, OneClassSvm, SvmOptions};
use crate::dataset::MtsDataset;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub lof_k: usize,
    /// LOF above this value is out-of-distribution.
    pub lof_threshold: f64,
    pub iforest_trees: usize,
    /// `None` uses `min(256, N)`.
    pub iforest_subsample: Option<usize>,
    pub iforest_threshold: f64,
    pub ocsvm_nu: f64,
    pub ocsvm_gamma: Gamma,
    /// Matrix-profile window; `None` uses `floor(T / 4)`.
    pub mp_window: Option<usize>,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            lof_k: 20,
            lof_threshold: 1.5,
            iforest_trees: 100,
            iforest_subsample: None,
            iforest_threshold: 0.5,
            ocsvm_nu: 0.05,
            ocsvm_gamma: Gamma::Scale,
            mp_window: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorVerdict {
    pub score: f64,
    pub ood: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityResult {
    pub lof: DetectorVerdict,
    pub iforest: DetectorVerdict,
    pub ocsvm_raw: DetectorVerdict,
    pub ocsvm_mp: DetectorVerdict,
}

impl PlausibilityResult {
    pub const DETECTORS: [&'static str; 4] = ["lof", "iforest", "ocsvm_raw", "ocsvm_mp"];

    /// Verdicts in the order of [`Self::DETECTORS`].
    pub fn verdicts(&self) -> [DetectorVerdict; 4] {
        [self.lof, self.iforest, self.ocsvm_raw, self.ocsvm_mp]
    }
}

/// The four novelty detectors, fitted on one training split.
#[derive(Clone, Debug)]
pub struct Detectors<F> {
    config: DetectorConfig,
    shape: (usize, usize),
    mp_window: usize,
    lof: LocalOutlierFactor<F>,
    iforest: IsolationForest<F>,
    ocsvm_raw: OneClassSvm<F>,
    ocsvm_mp: OneClassSvm<F>,
}

fn flatten<F: Scalar>(values: &[Vec<F>]) -> Vec<F> {
    values.iter().flatten().copied().collect()
}

fn profile_features<F: Scalar>(values: &[Vec<F>], m: usize) -> Result<Vec<F>, EvalError> {
    let mut out = Vec::new();
    for row in values {
        out.extend(matrix_profile(row, m)?);
    }
    Ok(out)
}

impl<F: Scalar> Detectors<F> {
    pub fn fit(train: &MtsDataset<F>, config: &DetectorConfig) -> Result<Self, EvalError> {
        let n = train.len();
        if n < 2 {
            return Err(EvalError::InvalidParam(format!(
                "detectors need at least 2 training instances, got {n}"
            )));
        }
        let t = train.series_len();
        let mp_window = config.mp_window.unwrap_or((t / 4).max(2));
        let raw: Vec<Vec<F>> = train.instances().iter().map(|i| flatten(i.values())).collect();
        let mp = train
            .instances()
            .iter()
            .map(|i| profile_features(i.values(), mp_window))
            .collect::<Result<Vec<_>, _>>()?;

        let lof = LocalOutlierFactor::fit(raw.clone(), config.lof_k.min(n - 1))?;
        let subsample = config.iforest_subsample.unwrap_or(256).min(n);
        let iforest = IsolationForest::fit(&raw, config.iforest_trees, subsample, config.seed)?;
        let svm = SvmOptions {
            nu: config.ocsvm_nu,
            gamma: config.ocsvm_gamma,
            ..SvmOptions::default()
        };
        let ocsvm_raw = OneClassSvm::fit(&raw, svm)?;
        let ocsvm_mp = OneClassSvm::fit(&mp, svm)?;
        Ok(Detectors {
            config: config.clone(),
            shape: (train.dims(), t),
            mp_window,
            lof,
            iforest,
            ocsvm_raw,
            ocsvm_mp,
        })
    }

    pub fn mp_window(&self) -> usize {
        self.mp_window
    }

    pub fn lof(&self) -> &LocalOutlierFactor<F> {
        &self.lof
    }

    pub fn iforest(&self) -> &IsolationForest<F> {
        &self.iforest
    }

    pub fn ocsvm_raw(&self) -> &OneClassSvm<F> {
        &self.ocsvm_raw
    }

    pub fn ocsvm_mp(&self) -> &OneClassSvm<F> {
        &self.ocsvm_mp
    }

    /// Scores a `D x T` matrix with every detector.
    pub fn assess(&self, values: &[Vec<F>]) -> Result<PlausibilityResult, EvalError> {
        let found = super::shape(values);
        if found != self.shape || values.iter().any(|r| r.len() != self.shape.1) {
            return Err(EvalError::ShapeMismatch(self.shape, found));
        }
        let raw = flatten(values);
        let mp = profile_features(values, self.mp_window)?;
        let lof = self.lof.score(&raw).as_f64();
        let iforest = self.iforest.score(&raw);
        let svm_raw = self.ocsvm_raw.decision(&raw);
        let svm_mp = self.ocsvm_mp.decision(&mp);
        Ok(PlausibilityResult {
            lof: DetectorVerdict {
                score: lof,
                ood: lof > self.config.lof_threshold,
            },
            iforest: DetectorVerdict {
                score: iforest,
                ood: iforest > self.config.iforest_threshold,
            },
            ocsvm_raw: DetectorVerdict {
                score: svm_raw,
                ood: svm_raw < 0.0,
            },
            ocsvm_mp: DetectorVerdict {
                score: svm_mp,
                ood: svm_mp < 0.0,
            },
        })
    }
}
