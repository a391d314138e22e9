//! Intensity statistics, intensity histogram and intensity-volume histogram.

use super::discretize::LevelGrid;
use super::matrix::entropy;
use crate::stats::descriptive::percentile_sorted;

pub const STATISTIC_FEATURES: [&str; 19] = [
    "mean",
    "variance",
    "skewness",
    "kurtosis",
    "median",
    "minimum",
    "p10",
    "p90",
    "maximum",
    "interquartile_range",
    "range",
    "mean_absolute_deviation",
    "robust_mean_absolute_deviation",
    "median_absolute_deviation",
    "coefficient_of_variation",
    "quartile_coefficient_of_dispersion",
    "energy",
    "root_mean_square",
    "total_energy",
];

pub const HISTOGRAM_FEATURES: [&str; 23] = [
    "hist_mean",
    "hist_variance",
    "hist_skewness",
    "hist_kurtosis",
    "hist_median",
    "hist_minimum",
    "hist_p10",
    "hist_p90",
    "hist_maximum",
    "hist_mode",
    "hist_interquartile_range",
    "hist_range",
    "hist_mean_absolute_deviation",
    "hist_robust_mean_absolute_deviation",
    "hist_median_absolute_deviation",
    "hist_coefficient_of_variation",
    "hist_quartile_coefficient_of_dispersion",
    "hist_entropy",
    "hist_uniformity",
    "hist_max_gradient",
    "hist_max_gradient_level",
    "hist_min_gradient",
    "hist_min_gradient_level",
];

pub const IVH_FEATURES: [&str; 7] = ["ivh_v10", "ivh_v90", "ivh_i10", "ivh_i90", "ivh_v10_minus_v90", "ivh_i10_minus_i90", "ivh_auc"];

/// Distribution statistics shared by raw intensities and gray levels:
/// mean … quartile coefficient of dispersion (the first 16 statistic
/// features, with median absolute deviation taken about the median).
fn distribution_stats(sorted: &[f64]) -> [f64; 16] {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let central = |k: i32| sorted.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let m2 = central(2);
    // Zero variance leaves the shape moments undefined; NaN is mapped to a
    // flagged 0 downstream.
    let (skew, kurt) = if m2 > 0.0 { (central(3) / m2.powf(1.5), central(4) / (m2 * m2) - 3.0) } else { (f64::NAN, f64::NAN) };
    let pct = |p: f64| percentile_sorted(sorted, p);
    let (p10, p25, median, p75, p90) = (pct(10.0), pct(25.0), pct(50.0), pct(75.0), pct(90.0));
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let mad = sorted.iter().map(|v| (v - mean).abs()).sum::<f64>() / n;
    let robust: Vec<f64> = sorted.iter().copied().filter(|v| *v >= p10 && *v <= p90).collect();
    let robust_mean = robust.iter().sum::<f64>() / robust.len() as f64;
    let rmad = robust.iter().map(|v| (v - robust_mean).abs()).sum::<f64>() / robust.len() as f64;
    let medad = sorted.iter().map(|v| (v - median).abs()).sum::<f64>() / n;
    let cov = m2.sqrt() / mean;
    let qcod = (p75 - p25) / (p75 + p25);
    [mean, m2, skew, kurt, median, min, p10, p90, max, p75 - p25, max - min, mad, rmad, medad, cov, qcod]
}

/// Statistic features on raw ROI intensities.
pub fn intensity_statistics(roi: &[f64], voxel_volume: f64) -> Vec<f64> {
    let mut sorted = roi.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut out = distribution_stats(&sorted).to_vec();
    let energy: f64 = roi.iter().map(|v| v * v).sum();
    out.push(energy);
    out.push((energy / roi.len() as f64).sqrt());
    out.push(energy * voxel_volume);
    out
}

/// Histogram features on discretized gray levels.
pub fn histogram_features(levels: &LevelGrid) -> Vec<f64> {
    let ng = levels.ng as usize;
    let mut sorted: Vec<f64> = levels.roi_levels().map(f64::from).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let stats = distribution_stats(&sorted);
    let n = sorted.len() as f64;
    let mut hist = vec![0.0; ng];
    for l in levels.roi_levels() {
        hist[l as usize - 1] += 1.0;
    }
    let mode = hist.iter().enumerate().fold((0, -1.0), |best, (i, &h)| if h > best.1 { (i, h) } else { best }).0 + 1;
    let probs: Vec<f64> = hist.iter().map(|h| h / n).collect();
    let gradient: Vec<f64> = (0..ng)
        .map(|i| match (i, ng) {
            (_, 1) => 0.0,
            (0, _) => hist[1] - hist[0],
            (i, ng) if i == ng - 1 => hist[i] - hist[i - 1],
            (i, _) => (hist[i + 1] - hist[i - 1]) / 2.0,
        })
        .collect();
    let (max_g_at, max_g) = gradient.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &g)| if g > b.1 { (i, g) } else { b });
    let (min_g_at, min_g) = gradient.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &g)| if g < b.1 { (i, g) } else { b });

    let mut out = stats[..9].to_vec();
    out.push(mode as f64);
    out.extend_from_slice(&stats[9..]);
    out.push(entropy(probs.iter().copied()));
    out.push(probs.iter().map(|p| p * p).sum());
    out.extend([max_g, (max_g_at + 1) as f64, min_g, (min_g_at + 1) as f64]);
    out
}

/// Intensity-volume histogram on the gray-level intensity fraction
/// γ = (level − 1)/(Ng − 1). ν(γ) is the ROI fraction at or above γ.
pub fn ivh_features(levels: &LevelGrid) -> Vec<f64> {
    let ng = levels.ng as usize;
    let n = levels.n_voxels as f64;
    let mut hist = vec![0.0; ng];
    for l in levels.roi_levels() {
        hist[l as usize - 1] += 1.0;
    }
    let gamma: Vec<f64> = (0..ng).map(|i| if ng > 1 { i as f64 / (ng - 1) as f64 } else { 0.0 }).collect();
    let mut nu = vec![0.0; ng];
    let mut above = 0.0;
    for i in (0..ng).rev() {
        above += hist[i];
        nu[i] = above / n;
    }
    // Volume fraction with intensity fraction of at least x.
    let volume_at = |x: f64| gamma.iter().zip(&nu).find(|(g, _)| **g >= x - 1e-12).map_or(0.0, |(_, v)| *v);
    // Smallest intensity fraction reached by at most x of the volume.
    let intensity_at = |x: f64| gamma.iter().zip(&nu).find(|(_, v)| **v <= x + 1e-12).map_or(1.0, |(g, _)| *g);
    let (v10, v90) = (volume_at(0.1), volume_at(0.9));
    let (i10, i90) = (intensity_at(0.1), intensity_at(0.9));
    let auc = if ng > 1 { gamma.windows(2).zip(nu.windows(2)).map(|(g, v)| (g[1] - g[0]) * (v[0] + v[1]) / 2.0).sum() } else { 0.0 };
    vec![v10, v90, i10, i90, v10 - v90, i10 - i90, auc]
}
