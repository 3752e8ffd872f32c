use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::distance::WindowScan;
use super::{MiningConfig, MiningError};
use crate::dataset::{Label, MtsInstance};
use crate::scalar::{total_cmp, Scalar};

pub const STORE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shapelet<F> {
    pub id: usize,
    pub values: Vec<F>,
    pub dim: usize,
    pub source_instance: usize,
    pub source_start: usize,
    /// Information gain in bits.
    pub quality: F,
    pub split_threshold: F,
    pub occ_threshold: F,
    pub class_assoc: Option<Label>,
    /// Whether distances compare z-normalized windows.
    pub normalized: bool,
}

impl<F> Shapelet<F> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occurrence<F> {
    pub shapelet_id: usize,
    pub instance_id: usize,
    pub start: usize,
    pub distance: F,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceDistribution {
    pub shapelet_id: usize,
    pub mean_start: usize,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredShapelet<F> {
    pub shapelet: Shapelet<F>,
    pub occurrences: Vec<Occurrence<F>>,
    pub distribution: OccurrenceDistribution,
}

/// Non-overlapping windows of `series` within `threshold` of `values`,
/// chosen greedily best-distance first. Sorted by `(distance, start)`.
pub fn occurrences_in<F: Scalar>(
    values: &[F],
    series: &[F],
    threshold: F,
    normalize: bool,
) -> Result<Vec<(usize, F)>, MiningError> {
    let mut scan = WindowScan::new(values, series, normalize)?;
    // slack so that every window with sqrt(sq) <= threshold survives the
    // squared comparison; the exact test follows
    let bound = threshold * threshold * (F::one() + F::lit(4.0) * F::epsilon());
    let mut hits: Vec<(usize, F)> = (0..scan.windows())
        .filter_map(|s| {
            let sq = scan.squared_at(s, bound);
            (sq <= bound).then(|| (s, sq.sqrt()))
        })
        .filter(|&(_, d)| d <= threshold)
        .collect();
    hits.sort_by(|a, b| total_cmp(a.1, b.1).then(a.0.cmp(&b.0)));
    let len = values.len();
    let mut accepted: Vec<(usize, F)> = Vec::new();
    for (s, d) in hits {
        if accepted.iter().all(|&(a, _)| s.abs_diff(a) >= len) {
            accepted.push((s, d));
        }
    }
    Ok(accepted)
}

/// Occurrences of `sh` in `instance` on the shapelet's dimension.
pub fn find_occurrences<F: Scalar>(
    sh: &Shapelet<F>,
    instance: &MtsInstance<F>,
) -> Result<Vec<Occurrence<F>>, MiningError> {
    if sh.dim >= instance.dims() {
        return Err(MiningError::DimensionOutOfRange {
            dim: sh.dim,
            dims: instance.dims(),
        });
    }
    Ok(
        occurrences_in(&sh.values, instance.dim(sh.dim), sh.occ_threshold, sh.normalized)?
            .into_iter()
            .map(|(start, distance)| Occurrence {
                shapelet_id: sh.id,
                instance_id: instance.id,
                start,
                distance,
            })
            .collect(),
    )
}

/// The class a shapelet belongs to, if every instance containing at least
/// one occurrence carries the same label. `hits` pairs each instance's
/// occurrence count with its label.
pub fn class_filter<'a, I>(hits: I) -> Option<Label>
where
    I: IntoIterator<Item = (usize, &'a Label)>,
{
    let mut class: Option<&Label> = None;
    for (count, label) in hits {
        if count == 0 {
            continue;
        }
        match class {
            None => class = Some(label),
            Some(c) if c != label => return None,
            _ => {}
        }
    }
    class.cloned()
}

/// Rounded mean occurrence start, clamped to `[0, series_len - len]`.
pub fn occurrence_distribution<F>(
    shapelet_id: usize,
    occs: &[Occurrence<F>],
    series_len: usize,
    len: usize,
) -> Result<OccurrenceDistribution, MiningError> {
    if occs.is_empty() {
        return Err(MiningError::NoOccurrences(shapelet_id));
    }
    let sum: usize = occs.iter().map(|o| o.start).sum();
    let mean = (sum as f64 / occs.len() as f64).round() as usize;
    Ok(OccurrenceDistribution {
        shapelet_id,
        mean_start: mean.min(series_len.saturating_sub(len)),
        support: occs.len(),
    })
}

/// Mined class-shapelets plus the mining configuration that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeletStore<F> {
    pub format_version: u32,
    pub seed: u64,
    pub config: MiningConfig,
    pub n_dims: usize,
    pub series_len: usize,
    pub classes: Vec<Label>,
    pub candidates_evaluated: usize,
    pub shapelets: Vec<StoredShapelet<F>>,
}

impl<F: Scalar> ShapeletStore<F> {
    pub fn is_empty(&self) -> bool {
        self.shapelets.is_empty()
    }

    pub fn len(&self) -> usize {
        self.shapelets.len()
    }

    pub fn get(&self, id: usize) -> Option<&StoredShapelet<F>> {
        self.shapelets.iter().find(|s| s.shapelet.id == id)
    }

    /// Shapelets of `class` on `dim`, best quality first, ties by id.
    pub fn for_class_dim(&self, class: &Label, dim: usize) -> Vec<&StoredShapelet<F>> {
        let mut v: Vec<_> = self
            .shapelets
            .iter()
            .filter(|s| s.shapelet.dim == dim && s.shapelet.class_assoc.as_ref() == Some(class))
            .collect();
        v.sort_by(|a, b| {
            total_cmp(b.shapelet.quality, a.shapelet.quality).then(a.shapelet.id.cmp(&b.shapelet.id))
        });
        v
    }

    /// `(class, dim) -> ids` in [`Self::for_class_dim`] order.
    pub fn index(&self) -> BTreeMap<(Label, usize), Vec<usize>> {
        let mut keys: Vec<(Label, usize)> = self
            .shapelets
            .iter()
            .filter_map(|s| Some((s.shapelet.class_assoc.clone()?, s.shapelet.dim)))
            .collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|(c, d)| {
                let ids = self.for_class_dim(&c, d).iter().map(|s| s.shapelet.id).collect();
                ((c, d), ids)
            })
            .collect()
    }

    /// Highest shapelet quality per dimension (`None` where none exist).
    pub fn best_quality_per_dim(&self) -> Vec<Option<F>> {
        let mut best: Vec<Option<F>> = vec![None; self.n_dims];
        for s in &self.shapelets {
            let slot = &mut best[s.shapelet.dim];
            *slot = Some(match *slot {
                Some(q) => q.max(s.shapelet.quality),
                None => s.shapelet.quality,
            });
        }
        best
    }

    /// Checks the structural invariants every store must satisfy.
    pub fn validate(&self) -> Result<(), MiningError> {
        let bad = |msg: String| Err(MiningError::InvalidStore(msg));
        if self.format_version != STORE_FORMAT_VERSION {
            return bad(format!("unsupported format_version {}", self.format_version));
        }
        let cap = self.series_len / 2;
        for (pos, s) in self.shapelets.iter().enumerate() {
            let sh = &s.shapelet;
            if sh.id != pos {
                return bad(format!("shapelet at position {pos} has id {}", sh.id));
            }
            if sh.dim >= self.n_dims {
                return bad(format!("shapelet {} on dimension {}", sh.id, sh.dim));
            }
            if sh.len() < 3 || sh.len() > cap {
                return bad(format!("shapelet {} has length {}", sh.id, sh.len()));
            }
            let Some(class) = &sh.class_assoc else {
                return bad(format!("shapelet {} has no class", sh.id));
            };
            if !self.classes.contains(class) {
                return bad(format!("shapelet {} has unknown class {class}", sh.id));
            }
            if !(sh.occ_threshold >= F::zero()) || !(sh.quality >= F::zero()) {
                return bad(format!("shapelet {} has negative threshold or quality", sh.id));
            }
            if s.occurrences.is_empty() {
                return bad(format!("shapelet {} has no occurrences", sh.id));
            }
            for o in &s.occurrences {
                if o.shapelet_id != sh.id
                    || o.distance > sh.occ_threshold
                    || o.start + sh.len() > self.series_len
                {
                    return bad(format!("shapelet {} has an inconsistent occurrence", sh.id));
                }
            }
            let d = &s.distribution;
            if d.shapelet_id != sh.id
                || d.support != s.occurrences.len()
                || d.mean_start + sh.len() > self.series_len
            {
                return bad(format!("shapelet {} has an inconsistent distribution", sh.id));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("store serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, MiningError> {
        let store: Self =
            serde_json::from_str(text).map_err(|e| MiningError::InvalidStore(e.to_string()))?;
        store.validate()?;
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MiningError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| MiningError::InvalidStore(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shapelet(values: Vec<f64>, threshold: f64) -> Shapelet<f64> {
        Shapelet {
            id: 4,
            values,
            dim: 0,
            source_instance: 0,
            source_start: 0,
            quality: 0.5,
            split_threshold: threshold,
            occ_threshold: threshold,
            class_assoc: None,
            normalized: false,
        }
    }

    fn occ(start: usize) -> Occurrence<f64> {
        Occurrence {
            shapelet_id: 0,
            instance_id: 0,
            start,
            distance: 0.0,
        }
    }

    #[test]
    fn exact_match_found_at_its_start() {
        let series = vec![vec![0.3, 1.0, 4.0, 2.0, 7.0, 0.0]];
        let inst = MtsInstance::new(2, series).unwrap();
        let sh = shapelet(vec![4.0, 2.0, 7.0], 0.5);
        let occs = find_occurrences(&sh, &inst).unwrap();
        assert_eq!(occs.len(), 1);
        assert_eq!((occs[0].start, occs[0].distance, occs[0].instance_id), (2, 0.0, 2));
    }

    #[test]
    fn zero_threshold_without_exact_match_is_empty() {
        let inst = MtsInstance::new(0, vec![vec![0.0, 1.0, 2.0, 3.0]]).unwrap();
        let sh = shapelet(vec![5.0, 5.0], 0.0);
        assert!(find_occurrences(&sh, &inst).unwrap().is_empty());
    }

    #[test]
    fn overlapping_hits_collapse_to_best() {
        // windows at 1 and 2 both match within 1.0; 2 is exact
        let series = [0.0, 0.9, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0];
        let hits = occurrences_in(&[1.0, 1.0], &series, 0.2, false).unwrap();
        assert_eq!(hits.iter().map(|h| h.0).collect::<Vec<_>>(), vec![2, 6]);
    }

    #[test]
    fn dimension_out_of_range() {
        let inst = MtsInstance::new(0, vec![vec![0.0, 1.0, 2.0]]).unwrap();
        let mut sh = shapelet(vec![0.0, 1.0], 1.0);
        sh.dim = 1;
        assert!(matches!(
            find_occurrences(&sh, &inst),
            Err(MiningError::DimensionOutOfRange { .. })
        ));
    }

    #[test]
    fn class_filter_rules() {
        let (a, b) = (Label::from("A"), Label::from("B"));
        assert_eq!(class_filter([(1, &a), (2, &a), (0, &b)]), Some(a.clone()));
        assert_eq!(class_filter([(1, &a), (1, &b)]), None);
        assert_eq!(class_filter([(0, &a), (0, &b)]), None);
    }

    #[test]
    fn distribution_examples() {
        let d = occurrence_distribution(0, &[occ(10)], 60, 10).unwrap();
        assert_eq!((d.mean_start, d.support), (10, 1));
        assert_eq!(occurrence_distribution(0, &[occ(10), occ(20)], 60, 10).unwrap().mean_start, 15);
        // (0 + 1 + 59) / 3 = 20, inside [0, 50]
        let d = occurrence_distribution(0, &[occ(0), occ(1), occ(59)], 60, 10).unwrap();
        assert_eq!(d.mean_start, 20);
        // clamp to T - L
        let d = occurrence_distribution(0, &[occ(55), occ(57)], 60, 10).unwrap();
        assert_eq!(d.mean_start, 50);
        assert!(occurrence_distribution::<f64>(0, &[], 60, 10).is_err());
    }
}
