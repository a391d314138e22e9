//! L2-regularized logistic regression fitted by damped Newton iterations.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticModel {
    /// Minimizes `C·Σ logloss + ½‖w‖²`; the intercept is not penalized.
    pub fn fit(x: &FeatureMatrix, y: &[u8], c: f64) -> Self {
        let n = x.n_rows();
        let p = x.n_cols();
        let d = p + 1;
        let design = |i: usize, j: usize| if j == 0 { 1.0 } else { x.get(i, j - 1) };
        let objective = |beta: &DVector<f64>| {
            let mut loss = 0.0;
            for i in 0..n {
                let z: f64 = (0..d).map(|j| design(i, j) * beta[j]).sum();
                loss += softplus(z) - f64::from(y[i]) * z;
            }
            c * loss + 0.5 * beta.rows(1, p).norm_squared()
        };

        let mut beta = DVector::<f64>::zeros(d);
        let mut current = objective(&beta);
        for _ in 0..100 {
            let mut grad = DVector::<f64>::zeros(d);
            let mut hess = DMatrix::<f64>::zeros(d, d);
            for i in 0..n {
                let z: f64 = (0..d).map(|j| design(i, j) * beta[j]).sum();
                let pi = sigmoid(z);
                let r = c * (pi - f64::from(y[i]));
                let s = c * (pi * (1.0 - pi)).max(1e-12);
                for a in 0..d {
                    let xa = design(i, a);
                    grad[a] += r * xa;
                    for b in a..d {
                        hess[(a, b)] += s * xa * design(i, b);
                    }
                }
            }
            for a in 1..d {
                grad[a] += beta[a];
                hess[(a, a)] += 1.0;
            }
            for a in 0..d {
                for b in 0..a {
                    hess[(a, b)] = hess[(b, a)];
                }
            }
            hess[(0, 0)] += 1e-10;
            let Some(chol) = hess.cholesky() else { break };
            let step = chol.solve(&grad);
            let mut t = 1.0;
            let mut improved = false;
            while t > 1e-8 {
                let candidate = &beta - &step * t;
                let value = objective(&candidate);
                if value <= current {
                    beta = candidate;
                    improved = current - value > 1e-14 * current.abs().max(1.0);
                    current = value;
                    break;
                }
                t *= 0.5;
            }
            if !improved || step.norm() * t < 1e-10 {
                break;
            }
        }
        Self { intercept: beta[0], coef: beta.iter().skip(1).copied().collect() }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(row).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        x.rows().map(|r| sigmoid(self.decision(r))).collect()
    }
}
