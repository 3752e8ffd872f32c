//! Shapelet-driven counterfactual search.
//!
//! For a query `x` of class A and a target class B the engine retrieves the
//! nearest training instance of class B, then works one dimension at a time
//! (best shapelet quality first): it replaces every occurrence of an A
//! class-shapelet in `x` with the neighbor's values over the same window,
//! then writes B class-shapelets at their mean occurrence positions. All
//! inserted segments are min-max rescaled into the range of `x` on that
//! dimension. The model is queried after every single perturbation. If no
//! dimension flips the decision alone, the per-dimension perturbation
//! sequences are combined over growing dimension subsets.

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blackbox::{Classifier, ModelError, PredictionVector};
use crate::dataset::{minmax_rescale, DatasetError, DimensionRange, Label, MtsDataset, MtsInstance};
use crate::mining::{
    find_occurrences, MiningError, Occurrence, OccurrenceDistribution, Shapelet, ShapeletStore,
    StoredShapelet,
};
use crate::parallel::par_map;
use crate::scalar::{squared_euclidean, total_cmp, Scalar};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("shapelet store is empty; mine class-shapelets first")]
    EmptyStore,
    #[error("training set has no instance of target class {0}")]
    EmptyTargetClass(Label),
    #[error("instance shape {found:?} does not match store shape {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

impl EngineError {
    pub fn is_model_unavailable(&self) -> bool {
        matches!(self, EngineError::Model(e) if e.is_unavailable())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    Removal,
    Introduction,
    /// Whole-dimension replacement (baseline method only).
    Substitution,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationSource {
    Nun,
    Shapelet,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub kind: PerturbationKind,
    pub dim: usize,
    /// Half-open `[start, end)`.
    pub window: (usize, usize),
    pub shapelet_id: Option<usize>,
    pub source: PerturbationSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchPhase {
    /// The model already predicted the target class.
    AlreadyTarget,
    SingleDimension,
    DimensionSubset,
    /// Nothing flipped the prediction; best attempt returned.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterfactual<F> {
    pub base_id: usize,
    pub original_class: Label,
    pub target_class: Label,
    pub values: Vec<Vec<F>>,
    pub perturbations: Vec<PerturbationRecord>,
    pub valid: bool,
    pub phase: SearchPhase,
    pub model_scores: PredictionVector<F>,
    pub model_calls: usize,
}

impl<F> Counterfactual<F> {
    /// Distinct dimensions touched, ascending.
    pub fn perturbed_dims(&self) -> Vec<usize> {
        self.perturbations.iter().map(|p| p.dim).sorted().dedup().collect()
    }
}

fn default_attempts() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    /// Largest dimension subset tried when combining; `None` means
    /// `min(D, 8)`.
    #[serde(default)]
    pub max_dims_in_subset: Option<usize>,
    /// Cap on subset compositions evaluated.
    #[serde(default = "default_attempts")]
    pub max_subset_attempts: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_dims_in_subset: None,
            max_subset_attempts: default_attempts(),
        }
    }
}

/// Training instance of class `target` closest to `x` (flattened Euclidean),
/// ties to the smallest id.
pub fn nearest_unlike_neighbor<'a, F: Scalar>(
    x: &MtsInstance<F>,
    target: &Label,
    train: &'a MtsDataset<F>,
) -> Result<&'a MtsInstance<F>, EngineError> {
    let q = x.flatten();
    train
        .iter()
        .filter(|(_, l)| *l == target)
        .map(|(inst, _)| (squared_euclidean(&q, &inst.flatten()), inst))
        .min_by(|a, b| total_cmp(a.0, b.0).then(a.1.id.cmp(&b.1.id)))
        .map(|(_, inst)| inst)
        .ok_or_else(|| EngineError::EmptyTargetClass(target.clone()))
}

/// Dimensions by best shapelet quality, descending; dimensions without
/// shapelets last; ties by index.
pub fn order_dimensions<F: Scalar>(store: &ShapeletStore<F>) -> Vec<usize> {
    let best = store.best_quality_per_dim();
    let mut dims: Vec<usize> = (0..store.n_dims).collect();
    dims.sort_by(|&a, &b| match (best[a], best[b]) {
        (Some(x), Some(y)) => total_cmp(y, x).then(a.cmp(&b)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cmp(&b),
    });
    dims
}

/// Overwrites the occurrence window of `sh` with the neighbor's values over
/// the same steps, rescaled into the range of `x` on that dimension.
pub fn remove_shapelet<F: Scalar>(
    x_cf: &mut [Vec<F>],
    x: &MtsInstance<F>,
    sh: &Shapelet<F>,
    occ: &Occurrence<F>,
    nun: &MtsInstance<F>,
) -> PerturbationRecord {
    let (start, end) = (occ.start, occ.start + sh.len());
    let patch = minmax_rescale(&nun.dim(sh.dim)[start..end], DimensionRange::of(x, sh.dim));
    x_cf[sh.dim][start..end].copy_from_slice(&patch);
    PerturbationRecord {
        kind: PerturbationKind::Removal,
        dim: sh.dim,
        window: (start, end),
        shapelet_id: Some(sh.id),
        source: PerturbationSource::Nun,
    }
}

/// Writes `sh` at its mean occurrence position, rescaled into the range of
/// `x` on that dimension.
pub fn introduce_shapelet<F: Scalar>(
    x_cf: &mut [Vec<F>],
    x: &MtsInstance<F>,
    sh: &Shapelet<F>,
    od: &OccurrenceDistribution,
) -> PerturbationRecord {
    let (start, end) = (od.mean_start, od.mean_start + sh.len());
    let patch = minmax_rescale(&sh.values, DimensionRange::of(x, sh.dim));
    x_cf[sh.dim][start..end].copy_from_slice(&patch);
    PerturbationRecord {
        kind: PerturbationKind::Introduction,
        dim: sh.dim,
        window: (start, end),
        shapelet_id: Some(sh.id),
        source: PerturbationSource::Shapelet,
    }
}

enum Step<'s, F> {
    Remove(&'s StoredShapelet<F>, Occurrence<F>),
    Introduce(&'s StoredShapelet<F>),
}

struct Attempt<F> {
    values: Vec<Vec<F>>,
    records: Vec<PerturbationRecord>,
    scores: PredictionVector<F>,
}

/// Counterfactual generator bound to a store, a model and the training set.
pub struct Explainer<'a, F: Scalar> {
    store: &'a ShapeletStore<F>,
    model: &'a dyn Classifier<F>,
    train: &'a MtsDataset<F>,
    config: EngineConfig,
    dim_order: Vec<usize>,
}

impl<'a, F: Scalar> Explainer<'a, F> {
    pub fn new(
        store: &'a ShapeletStore<F>,
        model: &'a dyn Classifier<F>,
        train: &'a MtsDataset<F>,
        config: EngineConfig,
    ) -> Result<Self, EngineError> {
        if store.is_empty() {
            return Err(EngineError::EmptyStore);
        }
        let expected = (store.n_dims, store.series_len);
        let found = (train.dims(), train.series_len());
        if expected != found {
            return Err(EngineError::ShapeMismatch { expected, found });
        }
        Ok(Explainer {
            dim_order: order_dimensions(store),
            store,
            model,
            train,
            config,
        })
    }

    pub fn dim_order(&self) -> &[usize] {
        &self.dim_order
    }

    fn plan(
        &self,
        x: &MtsInstance<F>,
        original: &Label,
        target: &Label,
        dim: usize,
    ) -> Result<Vec<Step<'a, F>>, EngineError> {
        let mut steps = Vec::new();
        for sh in self.store.for_class_dim(original, dim) {
            for occ in find_occurrences(&sh.shapelet, x)? {
                steps.push(Step::Remove(sh, occ));
            }
        }
        for sh in self.store.for_class_dim(target, dim) {
            steps.push(Step::Introduce(sh));
        }
        Ok(steps)
    }

    fn apply(
        step: &Step<'a, F>,
        values: &mut [Vec<F>],
        x: &MtsInstance<F>,
        nun: &MtsInstance<F>,
    ) -> PerturbationRecord {
        match step {
            Step::Remove(sh, occ) => remove_shapelet(values, x, &sh.shapelet, occ, nun),
            Step::Introduce(sh) => introduce_shapelet(values, x, &sh.shapelet, &sh.distribution),
        }
    }

    /// Generates one counterfactual moving `x` from `original` to `target`.
    pub fn explain(
        &self,
        x: &MtsInstance<F>,
        original: &Label,
        target: &Label,
    ) -> Result<Counterfactual<F>, EngineError> {
        let expected = (self.store.n_dims, self.store.series_len);
        if x.shape() != expected {
            return Err(EngineError::ShapeMismatch {
                expected,
                found: x.shape(),
            });
        }
        let mut calls = 0usize;
        let mut predict = |values: &[Vec<F>]| -> Result<PredictionVector<F>, EngineError> {
            calls += 1;
            let inst = x.with_values(values.to_vec())?;
            Ok(self.model.predict(&inst)?)
        };

        let finish = |attempt: Attempt<F>, valid: bool, phase: SearchPhase, calls: usize| {
            Counterfactual {
                base_id: x.id,
                original_class: original.clone(),
                target_class: target.clone(),
                values: attempt.values,
                perturbations: attempt.records,
                valid,
                phase,
                model_scores: attempt.scores,
                model_calls: calls,
            }
        };

        let initial = predict(x.values())?;
        if initial.argmax() == target {
            let attempt = Attempt {
                values: x.values().to_vec(),
                records: Vec::new(),
                scores: initial,
            };
            return Ok(finish(attempt, true, SearchPhase::AlreadyTarget, calls));
        }
        let nun = nearest_unlike_neighbor(x, target, self.train)?;

        let mut plans: Vec<(usize, Vec<Step<'a, F>>)> = Vec::new();
        for &d in &self.dim_order {
            let steps = self.plan(x, original, target, d)?;
            if !steps.is_empty() {
                plans.push((d, steps));
            }
        }

        let mut best = Attempt {
            values: x.values().to_vec(),
            records: Vec::new(),
            scores: initial,
        };
        let consider = |best: &mut Attempt<F>, attempt: Attempt<F>| {
            if attempt.scores.score(target) > best.scores.score(target) {
                *best = attempt;
            }
        };

        for (_, steps) in &plans {
            let mut values = x.values().to_vec();
            let mut records = Vec::new();
            for step in steps {
                records.push(Self::apply(step, &mut values, x, nun));
                let scores = predict(&values)?;
                let attempt = Attempt {
                    values: values.clone(),
                    records: records.clone(),
                    scores,
                };
                if attempt.scores.argmax() == target {
                    return Ok(finish(attempt, true, SearchPhase::SingleDimension, calls));
                }
                consider(&mut best, attempt);
            }
        }

        let best_quality = self.store.best_quality_per_dim();
        let max_k = self
            .config
            .max_dims_in_subset
            .unwrap_or(self.store.n_dims.min(8))
            .min(plans.len());
        let mut attempts = 0usize;
        'outer: for k in 2..=max_k {
            let mut subsets: Vec<(F, Vec<usize>)> = (0..plans.len())
                .combinations(k)
                .map(|c| {
                    let q = c
                        .iter()
                        .map(|&i| best_quality[plans[i].0].unwrap_or(F::zero()))
                        .fold(F::zero(), |a, v| a + v);
                    (q, c)
                })
                .collect();
            subsets.sort_by(|a, b| total_cmp(b.0, a.0));
            for (_, subset) in subsets {
                if attempts >= self.config.max_subset_attempts {
                    break 'outer;
                }
                attempts += 1;
                let mut values = x.values().to_vec();
                let mut records = Vec::new();
                for &i in &subset {
                    for step in &plans[i].1 {
                        records.push(Self::apply(step, &mut values, x, nun));
                    }
                }
                let scores = predict(&values)?;
                let attempt = Attempt {
                    values,
                    records,
                    scores,
                };
                if attempt.scores.argmax() == target {
                    return Ok(finish(attempt, true, SearchPhase::DimensionSubset, calls));
                }
                consider(&mut best, attempt);
            }
        }
        Ok(finish(best, false, SearchPhase::Exhausted, calls))
    }

    /// Explains many `(instance, original, target)` queries on up to `jobs`
    /// threads; output order matches input order.
    pub fn explain_all(
        &self,
        queries: &[(&MtsInstance<F>, Label, Label)],
        jobs: usize,
    ) -> Result<Vec<Counterfactual<F>>, EngineError> {
        par_map(queries, jobs, |(x, original, target)| self.explain(x, original, target))
    }
}
