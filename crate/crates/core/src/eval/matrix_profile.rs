use super::EvalError;
use crate::dataset::znormalize;
use crate::scalar::Scalar;

/// Self-join matrix profile by exhaustive scan: for every window of length
/// `m`, the smallest z-normalized Euclidean distance to a window starting
/// at least `m / 2` steps away.
pub fn matrix_profile<F: Scalar>(series: &[F], m: usize) -> Result<Vec<F>, EvalError> {
    if m < 2 || 2 * m > series.len() {
        return Err(EvalError::SeriesTooShort {
            len: series.len(),
            m,
        });
    }
    let windows: Vec<Vec<F>> = series.windows(m).map(znormalize).collect();
    let n = windows.len();
    let mut profile = vec![F::infinity(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if 2 * (j - i) < m {
                continue;
            }
            let d = windows[i]
                .iter()
                .zip(&windows[j])
                .map(|(&a, &b)| (a - b) * (a - b))
                .fold(F::zero(), |acc, v| acc + v)
                .sqrt();
            profile[i] = profile[i].min(d);
            profile[j] = profile[j].min(d);
        }
    }
    Ok(profile)
}
