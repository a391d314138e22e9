//! Lasso and elastic-net selection by cyclic coordinate descent.

use super::{top_k, DimredError, ReducerParams};
use crate::features::FeatureMatrix;

pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    z.signum() * (z.abs() - gamma).max(0.0)
}

/// Minimizes `(1/2n)‖y − Xβ‖² + λα‖β‖₁ + (λ(1−α)/2)‖β‖²` over the given
/// columns, starting from `beta` (updated in place).
pub fn coordinate_descent(cols: &[Vec<f64>], y: &[f64], lambda: f64, alpha: f64, beta: &mut [f64], max_iter: usize, tol: f64) {
    let n = y.len() as f64;
    let sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / n).collect();
    let mut r: Vec<f64> = y.to_vec();
    for (c, &b) in cols.iter().zip(beta.iter()) {
        if b != 0.0 {
            r.iter_mut().zip(c).for_each(|(ri, xi)| *ri -= xi * b);
        }
    }
    for _ in 0..max_iter {
        let mut max_delta = 0.0f64;
        for (j, c) in cols.iter().enumerate() {
            if sq[j] == 0.0 {
                continue;
            }
            let rho = c.iter().zip(&r).map(|(xi, ri)| xi * ri).sum::<f64>() / n + sq[j] * beta[j];
            let new = soft_threshold(rho, lambda * alpha) / (sq[j] + lambda * (1.0 - alpha));
            let delta = new - beta[j];
            if delta != 0.0 {
                r.iter_mut().zip(c).for_each(|(ri, xi)| *ri -= xi * delta);
                beta[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < tol {
            break;
        }
    }
}

/// Standardized design, centred 0/1 response. With a fixed λ that leaves at
/// least `k` nonzero coefficients the top-|β| features are taken there;
/// otherwise the automatic path (log-spaced from λ_max down to
/// λ_max·`path_ratio`) stops at the first λ with ≥ `k` nonzeros. If even the
/// end of the path is too sparse, the remainder is filled by |corr(x, y)|.
/// Returns selected columns and the |β| used for ranking (NaN for zeros).
pub fn select(x: &FeatureMatrix, y: &[u8], k: usize, alpha: f64, params: &ReducerParams) -> Result<(Vec<usize>, Vec<f64>), DimredError> {
    let n = x.n_rows() as f64;
    let p = x.n_cols();
    let mut usable = Vec::new();
    let mut cols = Vec::new();
    for j in 0..p {
        let c = x.column(j);
        let m = c.iter().sum::<f64>() / n;
        let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
        if sd > 0.0 {
            usable.push(j);
            cols.push(c.iter().map(|v| (v - m) / sd).collect::<Vec<f64>>());
        }
    }
    if usable.len() < k {
        return Err(DimredError::KTooLarge { k, available: usable.len() });
    }
    let ybar = y.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let yc: Vec<f64> = y.iter().map(|&v| f64::from(v) - ybar).collect();
    let corr: Vec<f64> = cols.iter().map(|c| c.iter().zip(&yc).map(|(a, b)| a * b).sum::<f64>() / n).collect();

    let ids: Vec<String> = usable.iter().map(|&j| x.feature_ids[j].clone()).collect();
    let magnitudes = |beta: &[f64]| -> Vec<f64> { beta.iter().map(|b| if *b != 0.0 { b.abs() } else { f64::NAN }).collect() };
    let finish = |beta: &[f64], picked: Vec<usize>| {
        let mut full = vec![f64::NAN; p];
        for (u, m) in magnitudes(beta).into_iter().enumerate() {
            full[usable[u]] = m;
        }
        (picked.into_iter().map(|u| usable[u]).collect::<Vec<_>>(), full)
    };

    let mut beta = vec![0.0; cols.len()];
    if let Some(lambda) = params.lambda {
        coordinate_descent(&cols, &yc, lambda, alpha, &mut beta, params.max_iter, params.tol);
        if let Ok(picked) = top_k(&magnitudes(&beta), &ids, k) {
            return Ok(finish(&beta, picked));
        }
        beta.iter_mut().for_each(|b| *b = 0.0);
    }

    let lambda_max = corr.iter().fold(0.0f64, |m, c| m.max(c.abs())) / alpha;
    let steps = params.path_length.max(2);
    for i in 0..steps {
        let lambda = lambda_max * params.path_ratio.powf(i as f64 / (steps - 1) as f64);
        coordinate_descent(&cols, &yc, lambda, alpha, &mut beta, params.max_iter, params.tol);
        if let Ok(picked) = top_k(&magnitudes(&beta), &ids, k) {
            return Ok(finish(&beta, picked));
        }
    }

    let mags = magnitudes(&beta);
    let mut picked: Vec<usize> = top_k(&mags, &ids, mags.iter().filter(|m| !m.is_nan()).count())?;
    let rest: Vec<f64> = (0..cols.len()).map(|u| if mags[u].is_nan() { corr[u].abs() } else { f64::NAN }).collect();
    picked.extend(top_k(&rest, &ids, k - picked.len())?);
    Ok(finish(&beta, picked))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_orthonormal_feature() {
        // x = [1, −1], y = [2, −2]: β_OLS = 2 and λ = 1 shrinks it to 1.
        let mut beta = [0.0];
        coordinate_descent(&[vec![1.0, -1.0]], &[2.0, -2.0], 1.0, 1.0, &mut beta, 100, 1e-12);
        assert_eq!(beta, [1.0]);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
    }

    #[test]
    fn huge_lambda_falls_back_to_path() {
        let rows: Vec<Vec<f64>> =
            (0..30).map(|i| vec![(i % 2) as f64 + 0.1 * (i as f64).sin(), (i as f64 * 0.7).cos(), (i as f64 * 0.3).sin()]).collect();
        let y: Vec<u8> = (0..30).map(|i| (i % 2) as u8).collect();
        let x = FeatureMatrix::from_unnamed_rows(rows);
        let params = ReducerParams { lambda: Some(1e6), ..Default::default() };
        let (picked, mags) = select(&x, &y, 2, 1.0, &params).unwrap();
        assert_eq!(picked.len(), 2);
        assert_eq!(picked[0], 0);
        assert!(mags[0] > 0.0);
    }
}
