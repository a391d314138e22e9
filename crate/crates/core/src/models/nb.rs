use serde::Serialize;

use crate::features::FeatureMatrix;

/// Gaussian naive Bayes; variances are padded by `var_smoothing` times the
/// largest feature variance.
#[derive(Debug, Clone, Serialize)]
pub struct GaussianNb {
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(x: &FeatureMatrix, y: &[u8], var_smoothing: f64) -> Self {
        let p = x.n_cols();
        let n = x.n_rows() as f64;
        let mut max_var = 0.0f64;
        for j in 0..p {
            let col = x.column(j);
            max_var = max_var.max(crate::stats::descriptive::population_variance(&col));
        }
        let eps = var_smoothing * max_var;
        let mut mean = [vec![0.0; p], vec![0.0; p]];
        let mut var = [vec![0.0; p], vec![0.0; p]];
        let mut count = [0usize; 2];
        for (row, &c) in x.rows().zip(y) {
            count[c as usize] += 1;
            for j in 0..p {
                mean[c as usize][j] += row[j];
            }
        }
        for c in 0..2 {
            mean[c].iter_mut().for_each(|m| *m /= count[c] as f64);
        }
        for (row, &c) in x.rows().zip(y) {
            let c = c as usize;
            for j in 0..p {
                var[c][j] += (row[j] - mean[c][j]).powi(2);
            }
        }
        for c in 0..2 {
            var[c].iter_mut().for_each(|v| *v = *v / count[c] as f64 + eps);
            // Guard against an all-constant matrix where eps is zero as well.
            var[c].iter_mut().for_each(|v| *v = v.max(1e-300));
        }
        let log_prior = [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()];
        Self { log_prior, mean, var }
    }

    fn joint_log_likelihood(&self, row: &[f64], c: usize) -> f64 {
        let mut ll = self.log_prior[c];
        for (j, &v) in row.iter().enumerate() {
            let s2 = self.var[c][j];
            ll -= 0.5 * (2.0 * std::f64::consts::PI * s2).ln() + (v - self.mean[c][j]).powi(2) / (2.0 * s2);
        }
        ll
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        x.rows()
            .map(|r| {
                let l0 = self.joint_log_likelihood(r, 0);
                let l1 = self.joint_log_likelihood(r, 1);
                1.0 / (1.0 + (l0 - l1).exp())
            })
            .collect()
    }
}
