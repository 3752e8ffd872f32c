use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distance::sdist;
use super::gain::information_gain;
use super::store::{
    class_filter, find_occurrences, occurrence_distribution, Shapelet, ShapeletStore,
    StoredShapelet, STORE_FORMAT_VERSION,
};
use super::{Budget, MiningConfig, MiningError, OccThresholdPolicy};
use crate::dataset::{Label, MtsDataset};
use crate::parallel::par_map;
use crate::scalar::{total_cmp, Scalar};

/// Candidates sampled per round under a wall-clock budget.
const TIMED_BATCH: usize = 256;

/// A sampled candidate window: `train[instance].dim(dim)[start..start + len]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSpec {
    pub instance: usize,
    pub dim: usize,
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug)]
struct Scored<F> {
    spec: CandidateSpec,
    source_id: usize,
    quality: F,
    split_threshold: F,
    occ_threshold: F,
}

/// Summary of one mining run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MiningLog {
    pub candidates_evaluated: usize,
    pub retained: usize,
    pub class_shapelets: usize,
    /// class -> dimension -> surviving class-shapelets
    pub survivors: BTreeMap<Label, BTreeMap<usize, usize>>,
    pub elapsed_secs: f64,
    pub warnings: Vec<String>,
}

pub struct MiningOutcome<F> {
    pub store: ShapeletStore<F>,
    pub log: MiningLog,
}

impl<F> MiningOutcome<F> {
    /// No class-shapelet survived; explanation cannot proceed.
    pub fn is_empty(&self) -> bool {
        self.store.shapelets.is_empty()
    }
}

fn sample(rng: &mut ChaCha8Rng, n: usize, dims: usize, t: usize, bounds: (usize, usize)) -> CandidateSpec {
    let instance = rng.random_range(0..n);
    let dim = rng.random_range(0..dims);
    let len = rng.random_range(bounds.0..=bounds.1);
    let start = rng.random_range(0..=t - len);
    CandidateSpec {
        instance,
        dim,
        start,
        len,
    }
}

fn percentile<F: Scalar>(values: &[F], p: f64) -> F {
    let mut v = values.to_vec();
    v.sort_by(|a, b| total_cmp(*a, *b));
    let rank = p / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let w = F::lit(rank - lo as f64);
    v[lo] + (v[hi] - v[lo]) * w
}

fn score<F: Scalar>(
    train: &MtsDataset<F>,
    config: &MiningConfig,
    spec: CandidateSpec,
) -> Result<Scored<F>, MiningError> {
    let source = train.instance(spec.instance);
    let values = &source.dim(spec.dim)[spec.start..spec.start + spec.len];
    let distances = train
        .instances()
        .iter()
        .map(|inst| sdist(values, inst.dim(spec.dim), config.normalize).map(|r| r.0))
        .collect::<Result<Vec<F>, _>>()?;
    let split = information_gain(&distances, train.labels())?;
    let occ_threshold = match config.occ_threshold {
        OccThresholdPolicy::Split => split.threshold,
        OccThresholdPolicy::Percentile(p) => percentile(&distances, p),
    };
    Ok(Scored {
        spec,
        source_id: source.id,
        quality: split.gain,
        split_threshold: split.threshold,
        occ_threshold,
    })
}

/// Total order: quality desc, then source instance, start, length, dimension.
fn rank<F: Scalar>(a: &Scored<F>, b: &Scored<F>) -> Ordering {
    total_cmp(b.quality, a.quality)
        .then(a.source_id.cmp(&b.source_id))
        .then(a.spec.start.cmp(&b.spec.start))
        .then(a.spec.len.cmp(&b.spec.len))
        .then(a.spec.dim.cmp(&b.spec.dim))
}

fn self_similar(a: &CandidateSpec, b: &CandidateSpec) -> bool {
    if a.instance != b.instance || a.dim != b.dim {
        return false;
    }
    let lo = a.start.max(b.start);
    let hi = (a.start + a.len).min(b.start + b.len);
    let overlap = hi.saturating_sub(lo);
    2 * overlap > a.len.min(b.len)
}

/// Mines class-shapelets from `train` under the configured budget.
///
/// Candidates are drawn from a seeded stream, scored independently on up to
/// `jobs` threads, and merged under a total order, so a candidate-count
/// budget gives identical stores for any `jobs`.
pub fn mine_contracted<F: Scalar>(
    train: &MtsDataset<F>,
    config: &MiningConfig,
    jobs: usize,
) -> Result<MiningOutcome<F>, MiningError> {
    config.validate()?;
    let classes = train.class_set();
    if classes.len() < 2 {
        return Err(MiningError::TooFewClasses(classes.len()));
    }
    let (n, dims, t) = (train.len(), train.dims(), train.series_len());
    let bounds = config.length_bounds(t)?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut scored: Vec<Scored<F>> = Vec::new();
    match config.budget {
        Budget::Candidates(count) => {
            let specs: Vec<CandidateSpec> =
                (0..count).map(|_| sample(&mut rng, n, dims, t, bounds)).collect();
            scored = par_map(&specs, jobs, |&s| score(train, config, s))?;
        }
        Budget::Seconds(secs) => {
            while started.elapsed().as_secs_f64() < secs {
                let specs: Vec<CandidateSpec> =
                    (0..TIMED_BATCH).map(|_| sample(&mut rng, n, dims, t, bounds)).collect();
                scored.extend(par_map(&specs, jobs, |&s| score(train, config, s))?);
            }
        }
    }
    let candidates_evaluated = scored.len();
    scored.sort_by(rank);

    let mut per_group: BTreeMap<(&Label, usize), Vec<CandidateSpec>> = BTreeMap::new();
    let mut retained: Vec<Scored<F>> = Vec::new();
    for cand in scored {
        let group = per_group
            .entry((train.label(cand.spec.instance), cand.spec.dim))
            .or_default();
        if group.len() >= config.top_q || group.iter().any(|g| self_similar(g, &cand.spec)) {
            continue;
        }
        group.push(cand.spec);
        retained.push(cand);
    }

    let built = par_map(&retained, jobs, |cand| {
        let source = train.instance(cand.spec.instance);
        let mut sh = Shapelet {
            id: 0,
            values: source.dim(cand.spec.dim)[cand.spec.start..cand.spec.start + cand.spec.len]
                .to_vec(),
            dim: cand.spec.dim,
            source_instance: source.id,
            source_start: cand.spec.start,
            quality: cand.quality,
            split_threshold: cand.split_threshold,
            occ_threshold: cand.occ_threshold,
            class_assoc: None,
            normalized: config.normalize,
        };
        let mut occurrences = Vec::new();
        let mut hits = Vec::with_capacity(n);
        for (inst, label) in train.iter() {
            let found = find_occurrences(&sh, inst)?;
            hits.push((found.len(), label));
            occurrences.extend(found);
        }
        sh.class_assoc = class_filter(hits);
        Ok::<_, MiningError>((sh, occurrences))
    })?;

    let mut shapelets = Vec::new();
    let mut survivors: BTreeMap<Label, BTreeMap<usize, usize>> = BTreeMap::new();
    for (mut sh, mut occurrences) in built {
        let Some(class) = sh.class_assoc.clone() else {
            continue;
        };
        let id = shapelets.len();
        sh.id = id;
        for o in &mut occurrences {
            o.shapelet_id = id;
        }
        let distribution = occurrence_distribution(id, &occurrences, t, sh.len())?;
        *survivors.entry(class).or_default().entry(sh.dim).or_default() += 1;
        shapelets.push(StoredShapelet {
            shapelet: sh,
            occurrences,
            distribution,
        });
    }

    let mut warnings = Vec::new();
    if shapelets.is_empty() {
        warnings.push(format!(
            "no class-shapelet survived out of {candidates_evaluated} candidates"
        ));
    }
    let log = MiningLog {
        candidates_evaluated,
        retained: retained.len(),
        class_shapelets: shapelets.len(),
        survivors,
        elapsed_secs: started.elapsed().as_secs_f64(),
        warnings,
    };
    let store = ShapeletStore {
        format_version: STORE_FORMAT_VERSION,
        seed: config.seed,
        config: config.clone(),
        n_dims: dims,
        series_len: t,
        classes,
        candidates_evaluated,
        shapelets,
    };
    Ok(MiningOutcome { store, log })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_similarity_needs_same_instance_and_majority_overlap() {
        let a = CandidateSpec { instance: 0, dim: 0, start: 10, len: 10 };
        let b = CandidateSpec { instance: 0, dim: 0, start: 14, len: 10 };
        let c = CandidateSpec { instance: 0, dim: 0, start: 15, len: 10 };
        let d = CandidateSpec { instance: 1, dim: 0, start: 10, len: 10 };
        assert!(self_similar(&a, &b));
        assert!(!self_similar(&a, &c));
        assert!(!self_similar(&a, &d));
        assert!(self_similar(&a, &a));
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[4.0f64, 1.0, 3.0, 2.0], 50.0), 2.5);
        assert_eq!(percentile(&[4.0f64, 1.0, 3.0, 2.0], 0.0), 1.0);
        assert_eq!(percentile(&[4.0f64, 1.0, 3.0, 2.0], 100.0), 4.0);
    }
}
