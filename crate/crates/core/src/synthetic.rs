//! Seeded synthetic datasets with known structure, for tests and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, MtsDataset, MtsInstance};
use crate::scalar::Scalar;

/// Two classes sharing a trapezoidal pulse on `motif_dim`; in class `A` the
/// plateau has a narrow V-shaped dip at its centre, in class `B` it is flat.
/// Both classes therefore span the same value range and differ only around
/// the dip. All other values are AR(1) noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotifConfig {
    pub n_per_class: usize,
    pub dims: usize,
    pub len: usize,
    pub motif_dim: usize,
    pub motif_width: usize,
    pub motif_height: f64,
    /// Steps taken by each ramp of the pulse.
    pub ramp: usize,
    pub dip_depth: f64,
    /// Nominal motif start; each instance shifts it by up to `jitter`.
    pub position: usize,
    pub jitter: usize,
    pub noise_sd: f64,
    /// AR(1) coefficient of the noise.
    pub ar: f64,
    pub seed: u64,
}

impl Default for MotifConfig {
    fn default() -> Self {
        MotifConfig {
            n_per_class: 40,
            dims: 3,
            len: 60,
            motif_dim: 0,
            motif_width: 16,
            motif_height: 6.0,
            ramp: 3,
            dip_depth: 4.0,
            position: 22,
            jitter: 2,
            noise_sd: 0.3,
            ar: 0.6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MotifDataset<F> {
    pub dataset: MtsDataset<F>,
    /// Motif start of each instance, by position.
    pub motif_starts: Vec<usize>,
    pub config: MotifConfig,
}

pub const CLASS_A: &str = "A";
pub const CLASS_B: &str = "B";

fn ar_noise(rng: &mut ChaCha8Rng, len: usize, sd: f64, ar: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let innovation = sd * (1.0 - ar * ar).max(0.0).sqrt();
    let mut e = sd * normal.sample(rng);
    (0..len)
        .map(|_| {
            let v = e;
            e = ar * e + innovation * normal.sample(rng);
            v
        })
        .collect()
}

/// Pulse value at offset `k` of a `width`-step motif.
fn pulse(k: usize, c: &MotifConfig, dipped: bool) -> f64 {
    let edge = k.min(c.motif_width - 1 - k);
    let mut v = c.motif_height * ((edge + 1) as f64 / (c.ramp + 1) as f64).min(1.0);
    if dipped {
        let centre = c.motif_width / 2;
        v -= match k.abs_diff(centre) {
            0 => c.dip_depth,
            1 => c.dip_depth / 2.0,
            _ => 0.0,
        };
    }
    v
}

/// Instances alternate between classes `A` and `B` (ids `0, 1, ...`).
pub fn motif_dataset<F: Scalar>(config: &MotifConfig) -> MotifDataset<F> {
    let c = config;
    assert!(c.motif_dim < c.dims, "motif dimension out of range");
    assert!(
        c.motif_width >= 2 * c.ramp + 3 && c.position + c.motif_width + c.jitter <= c.len && c.jitter <= c.position,
        "motif does not fit the series"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut instances = Vec::new();
    let mut labels = Vec::new();
    let mut motif_starts = Vec::new();
    for i in 0..2 * c.n_per_class {
        let dipped = i % 2 == 0;
        let start = c.position - c.jitter + rng.random_range(0..=2 * c.jitter);
        let values: Vec<Vec<F>> = (0..c.dims)
            .map(|d| {
                let mut row = ar_noise(&mut rng, c.len, c.noise_sd, c.ar);
                if d == c.motif_dim {
                    for k in 0..c.motif_width {
                        row[start + k] += pulse(k, c, dipped);
                    }
                }
                row.into_iter().map(F::lit).collect()
            })
            .collect();
        instances.push(MtsInstance::new(i, values).expect("non-empty instance"));
        labels.push(Label::from(if dipped { CLASS_A } else { CLASS_B }));
        motif_starts.push(start);
    }
    MotifDataset {
        dataset: MtsDataset::new(instances, labels).expect("consistent shapes"),
        motif_starts,
        config: config.clone(),
    }
}

/// Random-walk data with a given number of instances per class. Each class
/// gets its own drift so the classes are weakly separable.
pub fn class_count_dataset<F: Scalar>(
    counts: &[(&str, usize)],
    dims: usize,
    len: usize,
    seed: u64,
) -> MtsDataset<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut instances = Vec::new();
    let mut labels = Vec::new();
    for (c, &(label, n)) in counts.iter().enumerate() {
        let drift = 0.1 * c as f64;
        for _ in 0..n {
            let values = (0..dims)
                .map(|_| {
                    let mut level = 0.0;
                    (0..len)
                        .map(|_| {
                            level += drift + normal.sample(&mut rng);
                            F::lit(level)
                        })
                        .collect()
                })
                .collect();
            instances.push(MtsInstance::new(instances.len(), values).expect("non-empty instance"));
            labels.push(Label::from(label));
        }
    }
    MtsDataset::new(instances, labels).expect("consistent shapes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn motif_shape_and_labels() {
        let m = motif_dataset::<f64>(&MotifConfig::default());
        assert_eq!(m.dataset.len(), 80);
        assert_eq!(m.dataset.dims(), 3);
        assert_eq!(m.dataset.series_len(), 60);
        let counts = m.dataset.class_counts();
        assert_eq!(counts[&Label::from(CLASS_A)], 40);
        assert_eq!(counts[&Label::from(CLASS_B)], 40);
        assert!(m.motif_starts.iter().all(|&s| (20..=24).contains(&s)));
    }

    #[test]
    fn pulse_shape() {
        let c = MotifConfig::default();
        let plain: Vec<f64> = (0..16).map(|k| pulse(k, &c, false)).collect();
        assert_eq!(plain[0], 1.5);
        assert_eq!(plain[3], 6.0);
        assert_eq!(plain[15], 1.5);
        let dipped: Vec<f64> = (0..16).map(|k| pulse(k, &c, true)).collect();
        assert_eq!(dipped[8], 2.0);
        assert_eq!(dipped[7], 4.0);
        assert_eq!(dipped[9], 4.0);
        let diff: Vec<usize> = (0..16).filter(|&k| plain[k] != dipped[k]).collect();
        assert_eq!(diff, vec![7, 8, 9]);
    }

    #[test]
    fn deterministic() {
        let a = motif_dataset::<f64>(&MotifConfig::default());
        let b = motif_dataset::<f64>(&MotifConfig::default());
        assert_eq!(a.dataset.instance(5), b.dataset.instance(5));
    }

    #[test]
    fn class_counts_honored() {
        let ds = class_count_dataset::<f32>(&[("x", 3), ("y", 5)], 2, 10, 1);
        assert_eq!(ds.len(), 8);
        assert_eq!(ds.class_counts()[&Label::from("y")], 5);
    }
}
