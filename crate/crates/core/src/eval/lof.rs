use super::EvalError;
use crate::scalar::{total_cmp, Scalar};

/// Reachability-distance floor so duplicate-heavy data keeps finite density.
const DISTANCE_FLOOR: f64 = 1e-10;

fn euclidean<F: Scalar>(a: &[F], b: &[F]) -> F {
    crate::scalar::squared_euclidean(a, b).sqrt()
}

/// Local outlier factor in novelty mode: fitted on training vectors, then
/// used to score unseen points against them.
#[derive(Clone, Debug)]
pub struct LocalOutlierFactor<F> {
    k: usize,
    points: Vec<Vec<F>>,
    k_distance: Vec<F>,
    lrd: Vec<F>,
}

impl<F: Scalar> LocalOutlierFactor<F> {
    pub fn fit(points: Vec<Vec<F>>, k: usize) -> Result<Self, EvalError> {
        if k == 0 || k >= points.len() {
            return Err(EvalError::InvalidParam(format!(
                "LOF needs 1 <= k < N, got k={k}, N={}",
                points.len()
            )));
        }
        let n = points.len();
        let neighbors: Vec<Vec<(F, usize)>> = (0..n)
            .map(|i| {
                let cands = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (euclidean(&points[i], &points[j]), j));
                Self::nearest(cands, k)
            })
            .collect();
        let k_distance: Vec<F> = neighbors.iter().map(|nb| nb[k - 1].0).collect();
        let lrd = neighbors
            .iter()
            .map(|nb| Self::density(nb, &k_distance))
            .collect();
        Ok(LocalOutlierFactor {
            k,
            points,
            k_distance,
            lrd,
        })
    }

    fn nearest(cands: impl Iterator<Item = (F, usize)>, k: usize) -> Vec<(F, usize)> {
        let mut v: Vec<(F, usize)> = cands.collect();
        v.sort_by(|a, b| total_cmp(a.0, b.0).then(a.1.cmp(&b.1)));
        v.truncate(k);
        v
    }

    fn density(neighbors: &[(F, usize)], k_distance: &[F]) -> F {
        let reach = neighbors
            .iter()
            .map(|&(d, j)| d.max(k_distance[j]))
            .fold(F::zero(), |a, v| a + v)
            / F::from_usize_lossy(neighbors.len());
        F::one() / reach.max(F::lit(DISTANCE_FLOOR))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Local reachability density of each training point.
    pub fn training_densities(&self) -> &[F] {
        &self.lrd
    }

    pub fn k_distances(&self) -> &[F] {
        &self.k_distance
    }

    /// LOF of an unseen point; about 1 inside a cluster, well above 1 for
    /// isolated points.
    pub fn score(&self, v: &[F]) -> F {
        let cands = self
            .points
            .iter()
            .enumerate()
            .map(|(j, p)| (euclidean(v, p), j));
        let nb = Self::nearest(cands, self.k);
        let own = Self::density(&nb, &self.k_distance);
        let mean_neighbor = nb.iter().map(|&(_, j)| self.lrd[j]).fold(F::zero(), |a, x| a + x)
            / F::from_usize_lossy(nb.len());
        mean_neighbor / own
    }
}
