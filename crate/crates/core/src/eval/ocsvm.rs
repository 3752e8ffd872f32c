use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::scalar::Scalar;

/// RBF kernel width.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    /// `1 / (n_features * Var(X))` over all training entries.
    #[default]
    Scale,
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmOptions {
    pub nu: f64,
    pub gamma: Gamma,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// `None` means `max(10^7, 100 N)`.
    pub max_iter: Option<usize>,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            nu: 0.05,
            gamma: Gamma::Scale,
            tol: 1e-3,
            max_iter: None,
        }
    }
}

fn sq_dist<F: Scalar>(a: &[F], b: &[F]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x.as_f64() - y.as_f64();
            d * d
        })
        .sum()
}

/// One-class SVM with an RBF kernel.
///
/// Dual: minimize `1/2 a'Qa` subject to `0 <= a_i <= 1`, `sum a = nu N`,
/// solved by SMO on the maximal violating pair.
#[derive(Clone, Debug)]
pub struct OneClassSvm<F> {
    support: Vec<Vec<F>>,
    coef: Vec<f64>,
    alpha: Vec<f64>,
    rho: f64,
    gamma: f64,
    objective: f64,
    iterations: usize,
}

impl<F: Scalar> OneClassSvm<F> {
    pub fn fit(points: &[Vec<F>], options: SvmOptions) -> Result<Self, EvalError> {
        let n = points.len();
        if n == 0 {
            return Err(EvalError::InvalidParam("one-class SVM needs training points".into()));
        }
        if !(options.nu > 0.0 && options.nu <= 1.0) {
            return Err(EvalError::InvalidParam(format!("nu must lie in (0, 1], got {}", options.nu)));
        }
        let gamma = match options.gamma {
            Gamma::Value(g) if g > 0.0 && g.is_finite() => g,
            Gamma::Value(g) => {
                return Err(EvalError::InvalidParam(format!("gamma must be positive, got {g}")))
            }
            Gamma::Scale => scale_gamma(points),
        };

        let q: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (-gamma * sq_dist(&points[i], &points[j])).exp())
                    .collect()
            })
            .collect();

        let total = options.nu * n as f64;
        let full = (total.floor() as usize).min(n);
        let mut alpha = vec![0.0; n];
        for a in alpha.iter_mut().take(full) {
            *a = 1.0;
        }
        if full < n {
            alpha[full] = total - full as f64;
        }
        let mut grad: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| q[i][j] * alpha[j]).sum())
            .collect();

        let max_iter = options.max_iter.unwrap_or((100 * n).max(10_000_000));
        let mut iterations = 0;
        loop {
            // i: may grow (alpha < 1), smallest gradient; j: may shrink
            // (alpha > 0), largest gradient.
            let mut i = usize::MAX;
            let mut j = usize::MAX;
            let (mut gi, mut gj) = (f64::INFINITY, f64::NEG_INFINITY);
            for t in 0..n {
                if alpha[t] < 1.0 && grad[t] < gi {
                    gi = grad[t];
                    i = t;
                }
                if alpha[t] > 0.0 && grad[t] > gj {
                    gj = grad[t];
                    j = t;
                }
            }
            if i == usize::MAX || j == usize::MAX || gj - gi < options.tol {
                break;
            }
            if iterations >= max_iter {
                return Err(EvalError::NonConvergence(max_iter));
            }
            iterations += 1;
            let eta = (q[i][i] + q[j][j] - 2.0 * q[i][j]).max(1e-12);
            let delta = ((gj - gi) / eta).min(1.0 - alpha[i]).min(alpha[j]);
            alpha[i] += delta;
            alpha[j] -= delta;
            for (t, g) in grad.iter_mut().enumerate() {
                *g += delta * (q[t][i] - q[t][j]);
            }
        }

        let rho = compute_rho(&alpha, &grad);
        let objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>();
        let (support, coef) = points
            .iter()
            .zip(&alpha)
            .filter(|(_, &a)| a > 0.0)
            .map(|(p, &a)| (p.clone(), a))
            .unzip();
        Ok(OneClassSvm {
            support,
            coef,
            alpha,
            rho,
            gamma,
            objective,
            iterations,
        })
    }

    /// `sum a_i k(x_i, v) - rho`; negative means outside the learned support.
    pub fn decision(&self, v: &[F]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, a)| a * (-self.gamma * sq_dist(s, v)).exp())
            .sum::<f64>()
            - self.rho
    }

    /// Dual coefficients for every training point, in input order.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Dual objective `1/2 a'Qa` at the solution.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn n_support(&self) -> usize {
        self.support.len()
    }
}

fn scale_gamma<F: Scalar>(points: &[Vec<F>]) -> f64 {
    let d = points[0].len();
    let count = (points.len() * d) as f64;
    let mean = points.iter().flatten().map(|v| v.as_f64()).sum::<f64>() / count;
    let var = points
        .iter()
        .flatten()
        .map(|v| (v.as_f64() - mean).powi(2))
        .sum::<f64>()
        / count;
    if var > 0.0 && d > 0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

fn compute_rho(alpha: &[f64], grad: &[f64]) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for (&a, &g) in alpha.iter().zip(grad) {
        if a >= 1.0 {
            lb = lb.max(g);
        } else if a <= 0.0 {
            ub = ub.min(g);
        } else {
            free += 1;
            sum += g;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}
