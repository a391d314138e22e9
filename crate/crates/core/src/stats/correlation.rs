//! Rank correlation and intraclass correlation.

use super::descriptive::{average_ranks, is_constant, mean};
use super::StatsError;

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < min {
        return Err(StatsError::TooFewSamples { needed: min, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Pearson product-moment correlation, clamped to [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y, 2)?;
    if is_constant(x) || is_constant(y) {
        return Err(StatsError::ConstantInput);
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average ranks, so ties are exact.
/// A constant side is an error; callers report it as a flagged 0.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y, 2)?;
    if is_constant(x) || is_constant(y) {
        return Err(StatsError::ConstantInput);
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// ICC(2,1): two-way random effects, absolute agreement, single rater, for
/// two raters (`a` and `b`) scoring the same subjects.
///
/// `DegenerateVariance` is returned when every cell is equal; callers report
/// that as a flagged 1.0.
pub fn icc_2_1(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check_pair(a, b, 3)?;
    let n = a.len();
    let k = 2usize;
    let grand = (a.iter().sum::<f64>() + b.iter().sum::<f64>()) / (n * k) as f64;
    let col_means = [mean(a), mean(b)];
    let mut ssr = 0.0;
    let mut sse = 0.0;
    for i in 0..n {
        let row_mean = (a[i] + b[i]) / 2.0;
        ssr += (row_mean - grand).powi(2);
        for (j, v) in [a[i], b[i]].into_iter().enumerate() {
            let e = v - row_mean - col_means[j] + grand;
            sse += e * e;
        }
    }
    ssr *= k as f64;
    let ssc = n as f64 * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let msr = ssr / (n - 1) as f64;
    let msc = ssc / (k - 1) as f64;
    let mse = sse / ((n - 1) * (k - 1)) as f64;
    let denom = msr + (k as f64 - 1.0) * mse + k as f64 * (msc - mse) / n as f64;
    if denom == 0.0 || (msr == 0.0 && msc == 0.0 && mse == 0.0) {
        return Err(StatsError::DegenerateVariance);
    }
    Ok((msr - mse) / denom)
}
