use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shapecf_core::blackbox::ModelBinding;
use shapecf_core::cfgen::EngineConfig;
use shapecf_core::eval::DetectorConfig;
use shapecf_core::mining::MiningConfig;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// Directory holding `dim_<k>.csv` and `labels.csv`.
    pub path: PathBuf,
    /// Expected number of dimensions; discovered when absent.
    #[serde(default)]
    pub dims: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_fraction: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection { train_fraction: 0.7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Cells differing by at most this much do not count towards sparsity.
    pub tol: f64,
    pub valid_only: bool,
    /// Also generate and evaluate whole-dimension substitution counterfactuals.
    pub baseline: bool,
    /// Rows with `l1 > outlier_factor * median(l1)` get separate aggregates.
    pub outlier_factor: Option<f64>,
    pub detectors: DetectorConfig,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            tol: 0.0,
            valid_only: false,
            baseline: true,
            outlier_factor: None,
            detectors: DetectorConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("runs"),
        }
    }
}

/// Everything one pipeline run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Drives the split, candidate sampling and the isolation forest.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default)]
    pub jobs: Option<usize>,
    pub dataset: DatasetSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub mining: MiningConfig,
    #[serde(default)]
    pub model: ModelBinding,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line values that replace config keys.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub valid_only: bool,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    /// Parses TOML text. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: toml::Table = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        for (section, key) in [("mining", "seed"), ("eval.detectors", "seed")] {
            let mut node = Some(&raw);
            for part in section.split('.') {
                node = node.and_then(|t| t.get(part)).and_then(toml::Value::as_table);
            }
            if node.is_some_and(|t| t.contains_key(key)) {
                return Err(config_err(format!(
                    "`{section}.{key}` is not allowed; set the top-level `seed`"
                )));
            }
        }
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        if cfg.dataset.path.is_relative() {
            cfg.dataset.path = base.join(&cfg.dataset.path);
        }
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        cfg.sync_seeds();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn sync_seeds(&mut self) {
        self.mining.seed = self.seed;
        self.eval.detectors.seed = self.seed;
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
            self.sync_seeds();
        }
        if let Some(jobs) = o.jobs {
            self.jobs = Some(jobs);
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if o.valid_only {
            self.eval.valid_only = true;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !self.dataset.path.is_dir() {
            return Err(config_err(format!(
                "dataset directory {} does not exist",
                self.dataset.path.display()
            )));
        }
        let f = self.split.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(config_err(format!("split.train_fraction {f} must lie in (0, 1)")));
        }
        self.mining
            .validate()
            .map_err(|e| config_err(format!("mining: {e}")))?;
        if self.jobs == Some(0) {
            return Err(config_err("jobs must be >= 1"));
        }
        if let ModelBinding::BuiltinKnn { k: 0 } = self.model {
            return Err(config_err("model.k must be >= 1"));
        }
        if self.engine.max_subset_attempts == 0 {
            return Err(config_err("engine.max_subset_attempts must be >= 1"));
        }
        if !(self.eval.tol >= 0.0) {
            return Err(config_err("eval.tol must be >= 0"));
        }
        if let Some(f) = self.eval.outlier_factor {
            if !(f > 0.0) {
                return Err(config_err("eval.outlier_factor must be positive"));
            }
        }
        let d = &self.eval.detectors;
        if d.lof_k == 0 || d.iforest_trees == 0 {
            return Err(config_err("eval.detectors: lof_k and iforest_trees must be >= 1"));
        }
        if !(d.ocsvm_nu > 0.0 && d.ocsvm_nu <= 1.0) {
            return Err(config_err("eval.detectors.ocsvm_nu must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    /// Hash of every setting that affects artifact contents; worker count,
    /// output location and row filtering are left out.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.jobs = None;
        canonical.output = OutputSection::default();
        canonical.eval.valid_only = false;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output.dir.join(format!("run-{}", self.hash()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3
[dataset]
path = "data"
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(MINIMAL, Path::new("/cfg")).unwrap();
        assert_eq!(cfg.dataset.path, PathBuf::from("/cfg/data"));
        assert_eq!(cfg.output.dir, PathBuf::from("/cfg/runs"));
        assert_eq!(cfg.mining.seed, 3);
        assert_eq!(cfg.eval.detectors.seed, 3);
        assert_eq!(cfg.model, ModelBinding::BuiltinKnn { k: 1 });
        assert!(cfg.eval.baseline);
    }

    #[test]
    fn full_grammar() {
        let text = r#"
seed = 1
jobs = 2
[dataset]
path = "/abs/data"
dims = 3
[split]
train_fraction = 0.5
[mining]
budget = { candidates = 500 }
min_len = 4
max_len = 20
normalize = false
top_q = 3
occ_threshold = { percentile = 10.0 }
[model]
kind = "external-process"
program = "python3"
args = ["model.py"]
timeout_secs = 5.0
[engine]
max_dims_in_subset = 2
max_subset_attempts = 50
[eval]
tol = 1e-9
baseline = false
outlier_factor = 3.0
[eval.detectors]
lof_k = 10
ocsvm_gamma = { value = 0.5 }
mp_window = 8
[output]
dir = "out"
"#;
        let cfg = RunConfig::parse(text, Path::new("/cfg")).unwrap();
        assert_eq!(cfg.dataset.path, PathBuf::from("/abs/data"));
        assert_eq!(cfg.mining.budget, shapecf_core::mining::Budget::Candidates(500));
        assert_eq!(
            cfg.mining.occ_threshold,
            shapecf_core::mining::OccThresholdPolicy::Percentile(10.0)
        );
        assert_eq!(cfg.engine.max_dims_in_subset, Some(2));
        assert_eq!(cfg.eval.detectors.lof_k, 10);
        assert_eq!(cfg.eval.detectors.ocsvm_gamma, shapecf_core::eval::Gamma::Value(0.5));
        assert!(matches!(cfg.model, ModelBinding::ExternalProcess { .. }));
    }

    #[test]
    fn unknown_keys_and_nested_seeds_rejected() {
        let bad = format!("{MINIMAL}\n[split]\nfraction = 0.5\n");
        assert!(matches!(RunConfig::parse(&bad, Path::new(".")), Err(CliError::Config(_))));
        let nested = format!("{MINIMAL}\n[mining]\nbudget = {{ candidates = 5 }}\nseed = 9\n");
        assert!(matches!(RunConfig::parse(&nested, Path::new(".")), Err(CliError::Config(_))));
    }

    #[test]
    fn hash_ignores_jobs_output_and_filtering() {
        let a = RunConfig::parse(MINIMAL, Path::new("/cfg")).unwrap();
        let mut b = a.clone();
        b.apply(&Overrides {
            jobs: Some(7),
            out: Some(PathBuf::from("/elsewhere")),
            valid_only: true,
            ..Default::default()
        });
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.run_dir(), b.run_dir());
        let mut c = a.clone();
        c.apply(&Overrides {
            seed: Some(4),
            ..Default::default()
        });
        assert_ne!(a.hash(), c.hash());
        assert_eq!(c.mining.seed, 4);
    }
}
