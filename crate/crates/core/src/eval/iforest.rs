use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::scalar::Scalar;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Average path length of an unsuccessful BST search among `n` points; the
/// normalizer of isolation depth.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let m = (n - 1) as f64;
            2.0 * (m.ln() + EULER_GAMMA) - 2.0 * m / n as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum IsoNode<F> {
    /// Points with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
    },
}

/// One isolation tree; node 0 is the root.
#[derive(Clone, Debug)]
pub struct IsoTree<F> {
    pub nodes: Vec<IsoNode<F>>,
    /// Training positions the tree was grown on.
    pub sample: Vec<usize>,
}

impl<F: Scalar> IsoTree<F> {
    fn grow(
        points: &[Vec<F>],
        idx: Vec<usize>,
        depth: usize,
        limit: usize,
        rng: &mut ChaCha8Rng,
        nodes: &mut Vec<IsoNode<F>>,
    ) -> usize {
        let me = nodes.len();
        nodes.push(IsoNode::Leaf { size: idx.len() });
        if depth >= limit || idx.len() <= 1 {
            return me;
        }
        let n_features = points[idx[0]].len();
        let spread: Vec<(usize, F, F)> = (0..n_features)
            .filter_map(|f| {
                let (lo, hi) = idx.iter().fold((F::infinity(), F::neg_infinity()), |(lo, hi), &i| {
                    (lo.min(points[i][f]), hi.max(points[i][f]))
                });
                (hi > lo).then_some((f, lo, hi))
            })
            .collect();
        if spread.is_empty() {
            return me;
        }
        let (feature, lo, hi) = spread[rng.random_range(0..spread.len())];
        let u: f64 = rng.random();
        let threshold = (lo + (hi - lo) * F::lit(u)).min(hi);
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| points[i][feature] < threshold);
        let left = Self::grow(points, l, depth + 1, limit, rng, nodes);
        let right = Self::grow(points, r, depth + 1, limit, rng, nodes);
        nodes[me] = IsoNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        me
    }

    /// Edges from the root to the leaf reached by `v`, plus the average path
    /// length of the points left unresolved in that leaf.
    pub fn path_length(&self, v: &[F]) -> f64 {
        let mut node = 0;
        let mut depth = 0usize;
        loop {
            match &self.nodes[node] {
                IsoNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if v[*feature] < *threshold { *left } else { *right };
                    depth += 1;
                }
                IsoNode::Leaf { size } => return depth as f64 + average_path_length(*size),
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct IsolationForest<F> {
    trees: Vec<IsoTree<F>>,
    subsample: usize,
}

impl<F: Scalar> IsolationForest<F> {
    /// Grows `n_trees` trees on subsamples drawn without replacement.
    /// Depth is limited to `ceil(log2(subsample))`.
    pub fn fit(
        points: &[Vec<F>],
        n_trees: usize,
        subsample: usize,
        seed: u64,
    ) -> Result<Self, EvalError> {
        if n_trees == 0 {
            return Err(EvalError::InvalidParam("isolation forest needs >= 1 tree".into()));
        }
        if subsample < 2 || subsample > points.len() {
            return Err(EvalError::InvalidParam(format!(
                "subsample {subsample} must lie in 2..={}",
                points.len()
            )));
        }
        let limit = (subsample as f64).log2().ceil() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trees = (0..n_trees)
            .map(|_| {
                let mut idx = sample(&mut rng, points.len(), subsample).into_vec();
                idx.sort_unstable();
                let mut nodes = Vec::new();
                IsoTree::grow(points, idx.clone(), 0, limit, &mut rng, &mut nodes);
                IsoTree { nodes, sample: idx }
            })
            .collect();
        Ok(IsolationForest { trees, subsample })
    }

    pub fn trees(&self) -> &[IsoTree<F>] {
        &self.trees
    }

    pub fn subsample(&self) -> usize {
        self.subsample
    }

    pub fn mean_path_length(&self, v: &[F]) -> f64 {
        self.trees.iter().map(|t| t.path_length(v)).sum::<f64>() / self.trees.len() as f64
    }

    /// Anomaly score in (0, 1]; about 0.5 or below for ordinary points.
    pub fn score(&self, v: &[F]) -> f64 {
        2f64.powf(-self.mean_path_length(v) / average_path_length(self.subsample))
    }
}
