//! Wilcoxon signed-rank test for paired samples.

use statrs::distribution::{ContinuousCDF, Normal};

use super::descriptive::{average_ranks, tie_sizes};
use super::StatsError;

/// Largest effective sample size handled by the exact null distribution.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// min(W+, W−).
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Non-zero differences actually ranked.
    pub n_effective: usize,
    /// Standardized statistic (W − n(n+1)/4) / σ with tie-corrected σ, no
    /// continuity correction; always ≤ 0.
    pub z: f64,
    /// Two-sided.
    pub p: f64,
    pub exact: bool,
}

/// Signed-rank test on `x − y`. Zero differences are dropped and tied
/// magnitudes get average ranks.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    wilcoxon_differences(&d)
}

pub fn wilcoxon_differences(d: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if d.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let nz: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return Err(StatsError::AllZeroDifferences);
    }
    let mags: Vec<f64> = nz.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&mags);
    let w_plus: f64 = nz.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let w = w_plus.min(w_minus);

    let mean = total / 2.0;
    let ties: f64 = tie_sizes(&mags).iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = (n * (n + 1) * (2 * n + 1)) as f64 / 24.0 - ties / 48.0;
    let sd = var.sqrt();
    let z = if sd > 0.0 { (w - mean) / sd } else { 0.0 };

    let (p, exact) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, w), true)
    } else {
        let zc = if sd > 0.0 { ((w - mean + 0.5) / sd).min(0.0) } else { 0.0 };
        ((2.0 * Normal::standard().cdf(zc)).min(1.0), false)
    };
    Ok(WilcoxonResult { w, w_plus, w_minus, n_effective: n, z, p, exact })
}

/// Two-sided exact p: 2·P(T ≤ w) under random signs, capped at 1. Ranks are
/// doubled so average ranks stay integral.
pub fn exact_p(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let target = (2.0 * w).round() as usize;
    let below: f64 = counts[..=target.min(max)].iter().sum();
    let all = 2f64.powi(ranks.len() as i32);
    (2.0 * below / all).min(1.0)
}
