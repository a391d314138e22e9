//! Paired Student t-test.

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::descriptive::{is_constant, mean, sample_variance};
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

/// Paired t-test on `x − y`.
pub fn paired_t(x: &[f64], y: &[f64]) -> Result<TTestResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    one_sample_t(&d)
}

/// One-sample t-test of mean(d) = 0.
pub fn one_sample_t(d: &[f64]) -> Result<TTestResult, StatsError> {
    let n = d.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: n });
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if is_constant(d) {
        return Err(StatsError::ConstantDifferences);
    }
    let m = mean(d);
    let sd = sample_variance(d).sqrt();
    let t = m / (sd / (n as f64).sqrt());
    let df = (n - 1) as f64;
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTestResult { t, df, p })
}
