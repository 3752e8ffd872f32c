use serde::{Deserialize, Serialize};

use super::MtsInstance;
use crate::scalar::Scalar;

/// Value range of one dimension of one instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionRange<F> {
    pub dim: usize,
    pub min: F,
    pub max: F,
}

impl<F: Scalar> DimensionRange<F> {
    pub fn of(instance: &MtsInstance<F>, dim: usize) -> Self {
        let (min, max) = min_max(instance.dim(dim));
        DimensionRange { dim, min, max }
    }
}

fn min_max<F: Scalar>(values: &[F]) -> (F, F) {
    values
        .iter()
        .fold((F::infinity(), F::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Affine map of `segment` onto `[target.min, target.max]`. A constant
/// segment maps to the midpoint of the target range.
pub fn minmax_rescale<F: Scalar>(segment: &[F], target: DimensionRange<F>) -> Vec<F> {
    assert!(!segment.is_empty(), "minmax_rescale on an empty segment");
    let (lo, hi) = min_max(segment);
    let span = hi - lo;
    if span <= F::zero() {
        let mid = (target.min + target.max) / F::lit(2.0);
        return vec![mid; segment.len()];
    }
    let scale = (target.max - target.min) / span;
    segment
        .iter()
        .map(|&v| {
            if v == hi {
                target.max
            } else {
                target.min + (v - lo) * scale
            }
        })
        .collect()
}

/// Z-normalization with population standard deviation. Constant segments
/// map to zeros.
pub fn znormalize<F: Scalar>(segment: &[F]) -> Vec<F> {
    let mut out = vec![F::zero(); segment.len()];
    znormalize_into(segment, &mut out);
    out
}

pub fn znormalize_into<F: Scalar>(segment: &[F], out: &mut [F]) {
    debug_assert_eq!(segment.len(), out.len());
    let n = F::from_usize_lossy(segment.len());
    let mean = segment.iter().fold(F::zero(), |a, &v| a + v) / n;
    let var = segment
        .iter()
        .fold(F::zero(), |a, &v| a + (v - mean) * (v - mean))
        / n;
    let sd = var.sqrt();
    if sd <= F::epsilon() * mean.abs().max(F::one()) {
        out.iter_mut().for_each(|o| *o = F::zero());
        return;
    }
    for (o, &v) in out.iter_mut().zip(segment) {
        *o = (v - mean) / sd;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn range(min: f64, max: f64) -> DimensionRange<f64> {
        DimensionRange { dim: 0, min, max }
    }

    #[test]
    fn rescale_examples() {
        assert_eq!(minmax_rescale(&[0.0, 1.0, 2.0], range(10.0, 20.0)), vec![10.0, 15.0, 20.0]);
        assert_eq!(minmax_rescale(&[5.0, 5.0, 5.0], range(0.0, 2.0)), vec![1.0, 1.0, 1.0]);
        // (v + 1) * 8 / 4
        assert_eq!(minmax_rescale(&[-1.0, 0.0, 3.0], range(0.0, 8.0)), vec![0.0, 2.0, 8.0]);
    }

    #[test]
    fn znormalize_examples() {
        let z = znormalize(&[1.0f64, 2.0, 3.0]);
        let expect = [-1.2247, 0.0, 1.2247];
        for (a, b) in z.iter().zip(expect) {
            assert!((a - b).abs() < 1e-4);
        }
        assert_eq!(znormalize(&[7.0f64, 7.0, 7.0]), vec![0.0; 3]);
    }

    #[test]
    fn works_for_f32() {
        let z = znormalize(&[1.0f32, 2.0, 3.0]);
        assert!((z[2] - 1.2247).abs() < 1e-4);
        let r = minmax_rescale(&[0.0f32, 1.0, 2.0], DimensionRange { dim: 0, min: 10.0, max: 20.0 });
        assert_eq!(r, vec![10.0, 15.0, 20.0]);
    }

    #[test]
    fn range_of_instance_dimension() {
        let inst = MtsInstance::new(0, vec![vec![3.0, -1.0, 2.0], vec![0.0, 0.0, 9.0]]).unwrap();
        let r = DimensionRange::of(&inst, 0);
        assert_eq!((r.min, r.max), (-1.0, 3.0));
        assert_eq!(DimensionRange::of(&inst, 1).max, 9.0);
    }

    proptest! {
        #[test]
        fn rescale_hits_target_bounds(
            seg in prop::collection::vec(-1e3f64..1e3, 2..40),
            lo in -100.0f64..100.0,
            width in 0.0f64..50.0,
        ) {
            let (smin, smax) = min_max(&seg);
            prop_assume!(smax - smin > 1e-6);
            let out = minmax_rescale(&seg, range(lo, lo + width));
            let (omin, omax) = min_max(&out);
            prop_assert!((omin - lo).abs() <= 1e-9);
            prop_assert!((omax - (lo + width)).abs() <= 1e-9);
        }

        #[test]
        fn znormalize_is_idempotent(seg in prop::collection::vec(-1e3f64..1e3, 2..40)) {
            let once = znormalize(&seg);
            let twice = znormalize(&once);
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }
    }
}
