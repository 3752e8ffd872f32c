use serde::{Deserialize, Serialize};

use super::{check_same_shape, EvalError};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProximityResult<F> {
    pub l1: F,
    pub l2: F,
    pub linf: F,
}

/// L1, L2 and L-infinity norms of the cell-wise difference. `linf` is the
/// largest single-cell change.
pub fn proximity<F: Scalar>(x: &[Vec<F>], x_cf: &[Vec<F>]) -> Result<ProximityResult<F>, EvalError> {
    check_same_shape(x, x_cf)?;
    let mut l1 = F::zero();
    let mut l2 = F::zero();
    let mut linf = F::zero();
    for (a, b) in x.iter().flatten().zip(x_cf.iter().flatten()) {
        let d = (*a - *b).abs();
        l1 = l1 + d;
        l2 = l2 + d * d;
        linf = linf.max(d);
    }
    Ok(ProximityResult {
        l1,
        l2: l2.sqrt(),
        linf,
    })
}

/// Number of cells whose absolute change exceeds `tol`.
pub fn sparsity<F: Scalar>(x: &[Vec<F>], x_cf: &[Vec<F>], tol: F) -> Result<usize, EvalError> {
    check_same_shape(x, x_cf)?;
    Ok(x.iter()
        .flatten()
        .zip(x_cf.iter().flatten())
        .filter(|(a, b)| (**a - **b).abs() > tol)
        .count())
}
