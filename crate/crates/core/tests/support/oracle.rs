//! Slow, from-definition reference implementations used to cross-check the
//! library. Nothing here shares code with the crate under test.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

pub fn znorm(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd <= f64::EPSILON * mean.abs().max(1.0) {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| (x - mean) / sd).collect()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Every window distance, in start order.
pub fn window_distances(s: &[f64], t: &[f64], normalize: bool) -> Vec<f64> {
    let s = if normalize { znorm(s) } else { s.to_vec() };
    (0..=t.len() - s.len())
        .map(|i| {
            let w = &t[i..i + s.len()];
            if normalize {
                euclid(&s, &znorm(w))
            } else {
                euclid(&s, w)
            }
        })
        .collect()
}

pub fn sdist(s: &[f64], t: &[f64], normalize: bool) -> (f64, usize) {
    let d = window_distances(s, t, normalize);
    let mut best = (f64::INFINITY, 0);
    for (i, &v) in d.iter().enumerate() {
        if v < best.0 {
            best = (v, i);
        }
    }
    best
}

fn entropy(counts: &BTreeMap<&str, usize>) -> f64 {
    let n: usize = counts.values().sum();
    if n == 0 {
        return 0.0;
    }
    counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

/// Best binary split over all midpoints between distinct distances; a
/// later threshold must beat the incumbent by more than `1e-12`.
pub fn information_gain(d: &[f64], labels: &[&str]) -> (f64, f64) {
    let mut all = BTreeMap::new();
    for l in labels {
        *all.entry(*l).or_insert(0) += 1;
    }
    let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if all.len() < 2 {
        return (0.0, max);
    }
    let mut sorted = d.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let parent = entropy(&all);
    let mut best: Option<(f64, f64)> = None;
    for w in sorted.windows(2) {
        let thr = (w[0] + w[1]) / 2.0;
        let mut left = BTreeMap::new();
        let mut right = BTreeMap::new();
        for (&x, l) in d.iter().zip(labels) {
            let side = if x <= thr { &mut left } else { &mut right };
            *side.entry(*l).or_insert(0) += 1;
        }
        let nl = left.values().sum::<usize>() as f64;
        let nr = right.values().sum::<usize>() as f64;
        let n = nl + nr;
        let gain = (parent - nl / n * entropy(&left) - nr / n * entropy(&right)).max(0.0);
        if best.is_none_or(|(g, _)| gain > g + 1e-12) {
            best = Some((gain, thr));
        }
    }
    best.unwrap_or((0.0, max))
}

/// Windows within `thr`, accepted best-first unless they overlap an
/// accepted one. Returned as `(start, distance)` sorted by distance.
pub fn occurrences(s: &[f64], t: &[f64], thr: f64, normalize: bool) -> Vec<(usize, f64)> {
    let len = s.len();
    let mut hits: Vec<(usize, f64)> = window_distances(s, t, normalize)
        .into_iter()
        .enumerate()
        .filter(|&(_, d)| d <= thr)
        .collect();
    hits.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut accepted: Vec<(usize, f64)> = Vec::new();
    for (start, d) in hits {
        if accepted.iter().all(|&(a, _)| start + len <= a || a + len <= start) {
            accepted.push((start, d));
        }
    }
    accepted
}

pub fn matrix_profile(t: &[f64], m: usize) -> Vec<f64> {
    let n = t.len() - m + 1;
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| 2 * i.abs_diff(j) >= m)
                .map(|j| euclid(&znorm(&t[i..i + m]), &znorm(&t[j..j + m])))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Indices of the `k` nearest points to `q` (skipping `skip`), ties by index.
fn knn(points: &[Vec<f64>], q: &[f64], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, p)| (euclid(q, p), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.truncate(k);
    d
}

/// Local outlier factor of an unseen `q` with respect to `train`.
pub fn lof(train: &[Vec<f64>], k: usize, q: &[f64]) -> f64 {
    let kdist: Vec<f64> = (0..train.len())
        .map(|i| knn(train, &train[i], k, Some(i))[k - 1].0)
        .collect();
    let lrd = |nb: &[(f64, usize)]| {
        let reach: f64 = nb.iter().map(|&(d, j)| d.max(kdist[j])).sum::<f64>() / nb.len() as f64;
        1.0 / reach.max(1e-10)
    };
    let train_lrd: Vec<f64> = (0..train.len())
        .map(|i| lrd(&knn(train, &train[i], k, Some(i))))
        .collect();
    let nb = knn(train, q, k, None);
    let own = lrd(&nb);
    nb.iter().map(|&(_, j)| train_lrd[j] / own).sum::<f64>() / k as f64
}

/// `c(n)`: expected path length of an unsuccessful BST search.
pub fn c(n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else if n == 2 {
        1.0
    } else {
        let h = ((n - 1) as f64).ln() + 0.577_215_664_901_532_9;
        2.0 * h - 2.0 * (n - 1) as f64 / n as f64
    }
}

/// Minimum of `1/2 a'Qa` over `0 <= a <= 1`, `sum a = total`, found by
/// solving the stationarity system on every face of the box and keeping the
/// best feasible point.
pub fn ocsvm_dual_min(q: &[Vec<f64>], total: f64) -> f64 {
    let n = q.len();
    let mut best = f64::INFINITY;
    let faces = 3usize.pow(n as u32);
    for code in 0..faces {
        // 0: at lower bound, 1: at upper bound, 2: free
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut a = vec![0.0; n];
        for i in 0..n {
            if state[i] == 1 {
                a[i] = 1.0;
            }
        }
        let fixed_sum: f64 = a.iter().sum();
        if free.is_empty() {
            if (fixed_sum - total).abs() > 1e-9 {
                continue;
            }
        } else {
            // [Q_FF 1; 1' 0] [a_F; -rho] = [-Q_FU 1; total - |U|]
            let f = free.len();
            let mut m = DMatrix::<f64>::zeros(f + 1, f + 1);
            let mut rhs = DVector::<f64>::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    m[(r, cc)] = q[i][j];
                }
                m[(r, f)] = 1.0;
                m[(f, r)] = 1.0;
                rhs[r] = -(0..n).filter(|&j| state[j] == 1).map(|j| q[i][j]).sum::<f64>();
            }
            rhs[f] = total - fixed_sum;
            let Some(sol) = m.lu().solve(&rhs) else { continue };
            if (0..f).any(|r| !(sol[r] >= -1e-12 && sol[r] <= 1.0 + 1e-12)) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r].clamp(0.0, 1.0);
            }
        }
        let obj = 0.5
            * (0..n)
                .map(|i| (0..n).map(|j| a[i] * q[i][j] * a[j]).sum::<f64>())
                .sum::<f64>();
        best = best.min(obj);
    }
    best
}

/// Same minimum by brute force over a grid for three points.
pub fn ocsvm_dual_min_grid3(q: &[Vec<f64>], total: f64, step: f64) -> f64 {
    assert_eq!(q.len(), 3);
    let steps = (1.0 / step).round() as usize;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        for j in 0..=steps {
            let a0 = i as f64 * step;
            let a1 = j as f64 * step;
            let a2 = total - a0 - a1;
            if !(0.0..=1.0).contains(&a2) {
                continue;
            }
            let a = [a0, a1, a2];
            let obj = 0.5
                * (0..3)
                    .map(|r| (0..3).map(|s| a[r] * q[r][s] * a[s]).sum::<f64>())
                    .sum::<f64>();
            best = best.min(obj);
        }
    }
    best
}

pub fn rbf_gram(points: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| (-gamma * euclid(a, b).powi(2)).exp()).collect())
        .collect()
}
