//! Plug-in information measures on equal-frequency discretizations (nats).

use crate::features::FeatureMatrix;
use crate::stats::descriptive::percentile_sorted;

/// Bin index per value: the number of interior quantile edges strictly
/// below it. Repeated edges merge bins, so heavy ties yield fewer bins.
pub fn equal_frequency_bins(x: &[f64], n_bins: usize) -> Vec<usize> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (1..n_bins).map(|i| percentile_sorted(&sorted, 100.0 * i as f64 / n_bins as f64)).collect();
    x.iter().map(|&v| edges.partition_point(|&e| e < v)).collect()
}

fn counts(bins: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; bins.iter().max().map_or(0, |m| m + 1)];
    for &b in bins {
        c[b] += 1.0;
    }
    c
}

pub fn entropy(bins: &[usize]) -> f64 {
    let n = bins.len() as f64;
    counts(bins).iter().filter(|&&c| c > 0.0).map(|&c| -(c / n) * (c / n).ln()).sum()
}

pub fn mutual_information(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let ca = counts(a);
    let cb = counts(b);
    let mut joint = vec![0.0; ca.len() * cb.len()];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * cb.len() + j] += 1.0;
    }
    let mut mi = 0.0;
    for i in 0..ca.len() {
        for j in 0..cb.len() {
            let c = joint[i * cb.len() + j];
            if c > 0.0 {
                mi += c / n * (c * n / (ca[i] * cb[j])).ln();
            }
        }
    }
    mi.max(0.0)
}

fn label_bins(y: &[u8]) -> Vec<usize> {
    y.iter().map(|&v| usize::from(v)).collect()
}

pub fn mutual_info_scores(x: &FeatureMatrix, y: &[u8], n_bins: usize) -> Vec<f64> {
    let yb = label_bins(y);
    (0..x.n_cols()).map(|j| mutual_information(&equal_frequency_bins(&x.column(j), n_bins), &yb)).collect()
}

/// MI divided by the feature's binned entropy; NaN (excluded) when that
/// entropy is zero.
pub fn gain_ratio_scores(x: &FeatureMatrix, y: &[u8], n_bins: usize) -> Vec<f64> {
    let yb = label_bins(y);
    (0..x.n_cols())
        .map(|j| {
            let b = equal_frequency_bins(&x.column(j), n_bins);
            let h = entropy(&b);
            if h > 0.0 {
                mutual_information(&b, &yb) / h
            } else {
                f64::NAN
            }
        })
        .collect()
}
