use super::MiningError;
use crate::dataset::znormalize_into;
use crate::scalar::Scalar;

/// Euclidean distance from `shapelet` to every window of `series` of the
/// same length, optionally comparing z-normalized copies of both.
pub struct WindowScan<'a, F> {
    shape: Vec<F>,
    series: &'a [F],
    normalize: bool,
    buf: Vec<F>,
}

impl<'a, F: Scalar> WindowScan<'a, F> {
    pub fn new(shapelet: &[F], series: &'a [F], normalize: bool) -> Result<Self, MiningError> {
        if shapelet.is_empty() || shapelet.len() > series.len() {
            return Err(MiningError::ShapeletTooLong {
                shapelet: shapelet.len(),
                series: series.len(),
            });
        }
        let mut shape = shapelet.to_vec();
        if normalize {
            znormalize_into(shapelet, &mut shape);
        }
        Ok(WindowScan {
            buf: vec![F::zero(); shape.len()],
            shape,
            series,
            normalize,
        })
    }

    pub fn windows(&self) -> usize {
        self.series.len() - self.shape.len() + 1
    }

    /// Squared distance to the window at `start`, abandoning once the running
    /// sum exceeds `bound` (the returned value is then only a lower bound).
    pub fn squared_at(&mut self, start: usize, bound: F) -> F {
        let len = self.shape.len();
        let window = &self.series[start..start + len];
        let w: &[F] = if self.normalize {
            znormalize_into(window, &mut self.buf);
            &self.buf
        } else {
            window
        };
        let mut acc = F::zero();
        for (&a, &b) in self.shape.iter().zip(w) {
            let d = a - b;
            acc = acc + d * d;
            if acc > bound {
                break;
            }
        }
        acc
    }

    /// Exact distances for every window start.
    pub fn all(&mut self) -> Vec<F> {
        (0..self.windows())
            .map(|s| self.squared_at(s, F::infinity()).sqrt())
            .collect()
    }
}

/// Minimum window distance and the earliest start achieving it.
pub fn sdist<F: Scalar>(
    shapelet: &[F],
    series: &[F],
    normalize: bool,
) -> Result<(F, usize), MiningError> {
    let mut scan = WindowScan::new(shapelet, series, normalize)?;
    let mut best = F::infinity();
    let mut best_start = 0;
    for start in 0..scan.windows() {
        let d = scan.squared_at(start, best);
        if d < best {
            best = d;
            best_start = start;
        }
    }
    Ok((best.sqrt(), best_start))
}
