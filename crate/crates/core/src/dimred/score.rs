//! Univariate filters and recursive elimination.

use super::DimredError;
use crate::features::FeatureMatrix;
use crate::models::logistic::LogisticModel;
use crate::stats::correlation::pearson;
use crate::stats::descriptive::population_variance;

/// Column variances; NaN where the variance does not exceed `threshold`.
pub fn variance_scores(x: &FeatureMatrix, threshold: f64) -> Vec<f64> {
    (0..x.n_cols())
        .map(|j| {
            let v = population_variance(&x.column(j));
            if v > threshold {
                v
            } else {
                f64::NAN
            }
        })
        .collect()
}

/// Greedy decorrelation: visit features by descending variance and keep one
/// unless its |r| with an already kept feature reaches `threshold`.
pub fn correlation_filter(x: &FeatureMatrix, threshold: f64, k: usize) -> Result<Vec<usize>, DimredError> {
    let var = variance_scores(x, 0.0);
    let mut order: Vec<usize> = (0..x.n_cols()).filter(|&j| !var[j].is_nan()).collect();
    order.sort_by(|&a, &b| var[b].total_cmp(&var[a]).then(a.cmp(&b)));
    let cols: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| x.column(j)).collect();
    let mut kept: Vec<usize> = Vec::new();
    for j in order {
        if kept.len() == k {
            break;
        }
        let redundant = kept.iter().any(|&i| pearson(&cols[i], &cols[j]).is_ok_and(|r| r.abs() >= threshold));
        if !redundant {
            kept.push(j);
        }
    }
    if kept.len() < k {
        return Err(DimredError::KTooLarge { k, available: kept.len() });
    }
    Ok(kept)
}

/// One-way ANOVA F between the two label groups; NaN for constant columns.
pub fn anova_f(x: &FeatureMatrix, y: &[u8]) -> Vec<f64> {
    let n = y.len() as f64;
    let n1 = y.iter().filter(|&&v| v == 1).count() as f64;
    let n0 = n - n1;
    (0..x.n_cols())
        .map(|j| {
            let col = x.column(j);
            let (mut s0, mut s1) = (0.0, 0.0);
            for (v, &c) in col.iter().zip(y) {
                if c == 1 {
                    s1 += v
                } else {
                    s0 += v
                }
            }
            let (m0, m1) = (s0 / n0, s1 / n1);
            let m = (s0 + s1) / n;
            let ssb = n0 * (m0 - m).powi(2) + n1 * (m1 - m).powi(2);
            let ssw: f64 = col.iter().zip(y).map(|(v, &c)| (v - if c == 1 { m1 } else { m0 }).powi(2)).sum();
            if n0 == 0.0 || n1 == 0.0 || ssb + ssw == 0.0 {
                f64::NAN
            } else {
                ssb / (ssw / (n - 2.0))
            }
        })
        .collect()
}

/// Pearson chi-square of class-summed feature mass against its expectation
/// under independence.
pub fn chi_square(x: &FeatureMatrix, y: &[u8]) -> Result<Vec<f64>, DimredError> {
    if let Some(k) = x.data().iter().position(|&v| v < 0.0) {
        return Err(DimredError::NegativeInputForChiSquare(x.feature_ids[k % x.n_cols()].clone()));
    }
    let n = y.len() as f64;
    let prior = [y.iter().filter(|&&v| v == 0).count() as f64 / n, y.iter().filter(|&&v| v == 1).count() as f64 / n];
    Ok((0..x.n_cols())
        .map(|j| {
            let mut observed = [0.0; 2];
            for (i, &c) in y.iter().enumerate() {
                observed[c as usize] += x.get(i, j);
            }
            let total = observed[0] + observed[1];
            if total == 0.0 {
                return f64::NAN;
            }
            (0..2).filter(|&c| prior[c] > 0.0).map(|c| (observed[c] - prior[c] * total).powi(2) / (prior[c] * total)).sum()
        })
        .collect())
}

/// Recursive elimination with L2 logistic regression: each round drops the
/// `step` fraction (at least one) of remaining features with smallest |w|.
/// Returns survivors ordered by final |w|.
pub fn rfe_logistic(x: &FeatureMatrix, y: &[u8], k: usize, step: f64) -> Result<Vec<usize>, DimredError> {
    let var = variance_scores(x, 0.0);
    let mut remaining: Vec<usize> = (0..x.n_cols()).filter(|&j| !var[j].is_nan()).collect();
    if remaining.len() < k {
        return Err(DimredError::KTooLarge { k, available: remaining.len() });
    }
    loop {
        let model = LogisticModel::fit(&x.select_columns(&remaining), y, 1.0);
        let mut order: Vec<usize> = (0..remaining.len()).collect();
        order.sort_by(|&a, &b| model.coef[a].abs().total_cmp(&model.coef[b].abs()).then(b.cmp(&a)));
        if remaining.len() == k {
            return Ok(order.iter().rev().map(|&i| remaining[i]).collect());
        }
        let drop = ((step * remaining.len() as f64) as usize).max(1).min(remaining.len() - k);
        let mut dropped: Vec<usize> = order[..drop].to_vec();
        dropped.sort_unstable();
        for i in dropped.into_iter().rev() {
            remaining.remove(i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anova_matches_hand_computation() {
        // groups {1,2,3} and {4,5,6}: SSB = 13.5, SSW = 4, F = 13.5 / (4/4)
        let x = FeatureMatrix::from_unnamed_rows([1.0, 2.0, 3.0, 4.0, 5.0, 6.0].iter().map(|&v| vec![v]).collect());
        assert_eq!(anova_f(&x, &[0, 0, 0, 1, 1, 1]), vec![13.5]);
    }

    #[test]
    fn chi_square_matches_hand_computation() {
        // observed [1, 3], expected [2, 2] → (1 + 1) / 2
        let x = FeatureMatrix::from_unnamed_rows(vec![vec![1.0], vec![0.0], vec![3.0], vec![0.0]]);
        assert_eq!(chi_square(&x, &[0, 0, 1, 1]).unwrap(), vec![1.0]);
    }

    #[test]
    fn correlation_filter_drops_duplicates() {
        let x = FeatureMatrix::from_unnamed_rows(
            (0..10)
                .map(|i| {
                    let t = i as f64;
                    vec![t, 2.0 * t + 1.0, (t * 1.3).sin()]
                })
                .collect(),
        );
        assert_eq!(correlation_filter(&x, 0.9, 2).unwrap(), vec![1, 2]);
        assert_eq!(correlation_filter(&x, 0.9, 3).unwrap_err(), DimredError::KTooLarge { k: 3, available: 2 });
    }
}
