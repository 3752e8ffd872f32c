use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MiningError;
use crate::scalar::{total_cmp, Scalar};

/// Gains closer than this count as equal; the smaller threshold wins.
pub const GAIN_TIE_EPS: f64 = 1e-12;

/// Best binary split of a distance orderline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split<F> {
    /// Information gain in bits.
    pub gain: F,
    /// Distances `<= threshold` fall on the near side.
    pub threshold: F,
}

/// Shannon entropy in bits of a class histogram.
pub fn entropy<F: Scalar>(counts: &[usize]) -> F {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return F::zero();
    }
    let n = F::from_usize_lossy(n);
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = F::from_usize_lossy(c) / n;
            -p * p.log2()
        })
        .fold(F::zero(), |a, v| a + v)
}

/// Information gain of the best orderline split.
///
/// Candidate thresholds are midpoints between consecutive distinct sorted
/// distances. Single-class input, or input with one distinct distance, has
/// gain 0 at threshold `max(distances)`.
pub fn information_gain<F: Scalar, L: Ord>(
    distances: &[F],
    labels: &[L],
) -> Result<Split<F>, MiningError> {
    if distances.len() != labels.len() || distances.len() < 2 {
        return Err(MiningError::OrderlineSize {
            distances: distances.len(),
            labels: labels.len(),
        });
    }
    let mut class_of: BTreeMap<&L, usize> = labels.iter().map(|l| (l, 0)).collect();
    for (i, idx) in class_of.values_mut().enumerate() {
        *idx = i;
    }
    let max = distances.iter().copied().fold(F::neg_infinity(), F::max);
    let fallback = Split {
        gain: F::zero(),
        threshold: max,
    };
    if class_of.len() < 2 {
        return Ok(fallback);
    }

    let mut order: Vec<(F, usize)> = distances
        .iter()
        .zip(labels)
        .map(|(&d, l)| (d, class_of[l]))
        .collect();
    order.sort_by(|a, b| total_cmp(a.0, b.0));

    let k = class_of.len();
    let mut total = vec![0usize; k];
    for &(_, c) in &order {
        total[c] += 1;
    }
    let n = order.len();
    let nf = F::from_usize_lossy(n);
    let parent: F = entropy(&total);

    let mut left = vec![0usize; k];
    let mut right = total.clone();
    let mut best: Option<Split<F>> = None;
    let eps = F::lit(GAIN_TIE_EPS);
    for i in 0..n - 1 {
        let (d, c) = order[i];
        left[c] += 1;
        right[c] -= 1;
        let next = order[i + 1].0;
        if !(d < next) {
            continue;
        }
        let nl = F::from_usize_lossy(i + 1);
        let nr = F::from_usize_lossy(n - i - 1);
        let children = nl / nf * entropy::<F>(&left) + nr / nf * entropy::<F>(&right);
        let gain = (parent - children).max(F::zero());
        let threshold = (d + next) / F::lit(2.0);
        if best.is_none_or(|b| gain > b.gain + eps) {
            best = Some(Split { gain, threshold });
        }
    }
    Ok(best.unwrap_or(fallback))
}
