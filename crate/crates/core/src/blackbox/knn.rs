use std::collections::BTreeMap;

use super::{Classifier, ModelError, PredictionVector};
use crate::dataset::{Label, MtsDataset, MtsInstance};
use crate::scalar::{squared_euclidean, total_cmp, Scalar};

/// k-nearest-neighbor vote over flattened `D*T` vectors with Euclidean
/// distance. Neighbor ties resolve to the earlier training position.
#[derive(Clone, Debug)]
pub struct KnnClassifier<F> {
    k: usize,
    shape: (usize, usize),
    classes: Vec<Label>,
    points: Vec<Vec<F>>,
    labels: Vec<Label>,
}

impl<F: Scalar> KnnClassifier<F> {
    pub fn fit(train: &MtsDataset<F>, k: usize) -> Result<Self, ModelError> {
        if train.is_empty() {
            return Err(ModelError::EmptyTraining);
        }
        if k == 0 || k > train.len() {
            return Err(ModelError::InvalidK { k, n: train.len() });
        }
        Ok(KnnClassifier {
            k,
            shape: (train.dims(), train.series_len()),
            classes: train.class_set(),
            points: train.instances().iter().map(MtsInstance::flatten).collect(),
            labels: train.labels().to_vec(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl<F: Scalar> Classifier<F> for KnnClassifier<F> {
    fn classes(&self) -> &[Label] {
        &self.classes
    }

    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn predict(&self, instance: &MtsInstance<F>) -> Result<PredictionVector<F>, ModelError> {
        self.check_shape(instance)?;
        let query = instance.flatten();
        let mut dists: Vec<(F, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (squared_euclidean(&query, p), i))
            .collect();
        let by_dist = |a: &(F, usize), b: &(F, usize)| total_cmp(a.0, b.0).then(a.1.cmp(&b.1));
        if self.k < dists.len() {
            dists.select_nth_unstable_by(self.k - 1, by_dist);
            dists.truncate(self.k);
        }
        let mut scores: BTreeMap<Label, F> =
            self.classes.iter().map(|c| (c.clone(), F::zero())).collect();
        let vote = F::one() / F::from_usize_lossy(self.k);
        for &(_, i) in &dists {
            *scores.get_mut(&self.labels[i]).expect("known class") =
                scores[&self.labels[i]] + vote;
        }
        Ok(PredictionVector::new(scores))
    }
}
