use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetError, Label, MtsDataset};
use crate::scalar::Scalar;

// Guards `floor(0.7 * 350)` against `244.99999999999997`.
const FLOOR_SLACK: f64 = 1e-9;

/// Per-class train counts for a stratified split.
///
/// The train total is `floor(fraction * N)`. Each class first receives
/// `floor(fraction * N_c)`; leftover slots go one each to the classes with
/// the largest fractional parts, ties by label order.
pub fn stratified_train_counts(
    counts: &BTreeMap<Label, usize>,
    fraction: f64,
) -> BTreeMap<Label, usize> {
    let n: usize = counts.values().sum();
    let total = (fraction * n as f64 + FLOOR_SLACK).floor() as usize;
    let mut train: BTreeMap<Label, usize> = BTreeMap::new();
    let mut remainders = Vec::new();
    for (label, &c) in counts {
        let exact = fraction * c as f64;
        let base = (exact + FLOOR_SLACK).floor();
        train.insert(label.clone(), base as usize);
        remainders.push(((exact - base).max(0.0), label.clone()));
    }
    let assigned: usize = train.values().sum();
    let mut extra = total.saturating_sub(assigned);
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    for (_, label) in remainders {
        if extra == 0 {
            break;
        }
        let slot = train.get_mut(&label).expect("label present");
        if *slot < counts[&label] {
            *slot += 1;
            extra -= 1;
        }
    }
    train
}

/// Stratified, seeded split. Both halves keep the original instance order.
pub fn train_test_split<F: Scalar>(
    ds: &MtsDataset<F>,
    train_fraction: f64,
    seed: u64,
) -> Result<(MtsDataset<F>, MtsDataset<F>), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(train_fraction));
    }
    let counts = ds.class_counts();
    if let Some((class, &count)) = counts.iter().find(|(_, &c)| c < 2) {
        return Err(DatasetError::Stratification {
            class: class.clone(),
            count,
        });
    }
    let train_counts = stratified_train_counts(&counts, train_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (label, &k) in &train_counts {
        let mut members = ds.indices_of(label);
        members.shuffle(&mut rng);
        train_idx.extend_from_slice(&members[..k]);
        test_idx.extend_from_slice(&members[k..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((ds.select(&train_idx)?, ds.select(&test_idx)?))
}
