//! Two-group MANOVA after pooled PCA reduction.

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::StatsError;
use crate::features::FeatureMatrix;
use crate::linalg::symmetric_eigen;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ManovaDecision {
    Rejected,
    NotRejected,
}

impl ManovaDecision {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rejected => "Rejected",
            Self::NotRejected => "Not rejected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManovaResult {
    pub wilks: f64,
    pub pillai: f64,
    pub hotelling_lawley: f64,
    pub roy: f64,
    /// Rao's F approximation for Wilks' lambda.
    pub f_approx: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
    pub decision: ManovaDecision,
    /// Dimensions the test actually ran in after reduction.
    pub components: usize,
    /// Non-zero eigenvalues of E⁻¹H, descending.
    pub eigenvalues: Vec<f64>,
}

/// Default reduction target for a pooled sample of `n_total` cases.
pub fn default_reduce_to(n_total: usize) -> usize {
    10usize.min(n_total.saturating_sub(3))
}

/// Columns are standardized on the pooled sample (constant ones dropped),
/// projected onto the leading `reduce_to` principal components, and the
/// group difference is tested in that space.
pub fn manova_two_group(a: &FeatureMatrix, b: &FeatureMatrix, reduce_to: usize) -> Result<ManovaResult, StatsError> {
    if a.feature_ids != b.feature_ids {
        return Err(StatsError::FeatureMismatch);
    }
    let (na, nb) = (a.n_rows(), b.n_rows());
    let n = na + nb;
    if n <= reduce_to + 2 || na == 0 || nb == 0 {
        return Err(StatsError::TooFewForManova { needed: reduce_to + 2, got: n });
    }
    if a.data().iter().chain(b.data()).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let pooled: Vec<&[f64]> = a.rows().chain(b.rows()).collect();
    let z = standardize(&pooled);
    let scores = pca_scores(&z, n, reduce_to);
    let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= na)).collect();
    manova_scores(&scores, &labels)
}

/// Pooled z-scores as an n × p matrix with constant columns removed.
fn standardize(rows: &[&[f64]]) -> DMatrix<f64> {
    let n = rows.len();
    let p = rows.first().map_or(0, |r| r.len());
    let mut cols = Vec::new();
    for j in 0..p {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if sd > 1e-12 * mean.abs().max(1.0) {
            cols.push(col.iter().map(|v| (v - mean) / sd).collect::<Vec<_>>());
        }
    }
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Scores on the leading principal components, via the smaller of the Gram
/// and covariance eigenproblems. Near-null directions are dropped.
fn pca_scores(z: &DMatrix<f64>, n: usize, reduce_to: usize) -> DMatrix<f64> {
    if z.ncols() == 0 || reduce_to == 0 {
        return DMatrix::zeros(n, 0);
    }
    let gram_route = n <= z.ncols();
    let (values, vectors) = if gram_route { symmetric_eigen(&(z * z.transpose())) } else { symmetric_eigen(&(z.transpose() * z)) };
    let top = values.first().copied().unwrap_or(0.0);
    let keep = if top > 0.0 { values.iter().take(reduce_to).take_while(|&&v| v > 1e-10 * top).count() } else { 0 };
    let mut out = DMatrix::zeros(n, keep);
    for k in 0..keep {
        if gram_route {
            out.set_column(k, &(vectors.column(k) * values[k].sqrt()));
        } else {
            out.set_column(k, &(z * vectors.column(k)));
        }
    }
    out
}

/// One-way MANOVA for two groups on an n × q score matrix.
pub fn manova_scores(x: &DMatrix<f64>, labels: &[usize]) -> Result<ManovaResult, StatsError> {
    let n = x.nrows();
    let q = x.ncols();
    let groups = 2usize;
    if q == 0 {
        return Ok(ManovaResult {
            wilks: 1.0,
            pillai: 0.0,
            hotelling_lawley: 0.0,
            roy: 0.0,
            f_approx: 0.0,
            df1: 0.0,
            df2: 0.0,
            p: 1.0,
            decision: ManovaDecision::NotRejected,
            components: 0,
            eigenvalues: Vec::new(),
        });
    }
    let mut means = vec![vec![0.0; q]; groups];
    let mut counts = [0usize; 2];
    let mut grand = vec![0.0; q];
    for i in 0..n {
        let g = labels[i];
        counts[g] += 1;
        for j in 0..q {
            means[g][j] += x[(i, j)];
            grand[j] += x[(i, j)];
        }
    }
    for g in 0..groups {
        means[g].iter_mut().for_each(|m| *m /= counts[g] as f64);
    }
    grand.iter_mut().for_each(|m| *m /= n as f64);

    let mut h = DMatrix::<f64>::zeros(q, q);
    for g in 0..groups {
        let d: Vec<f64> = (0..q).map(|j| means[g][j] - grand[j]).collect();
        for r in 0..q {
            for c in 0..q {
                h[(r, c)] += counts[g] as f64 * d[r] * d[c];
            }
        }
    }
    let mut e = DMatrix::<f64>::zeros(q, q);
    for i in 0..n {
        let m = &means[labels[i]];
        let d: Vec<f64> = (0..q).map(|j| x[(i, j)] - m[j]).collect();
        for r in 0..q {
            for c in 0..q {
                e[(r, c)] += d[r] * d[c];
            }
        }
    }

    let chol = e.clone().cholesky().ok_or(StatsError::SingularWithinMatrix)?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or(StatsError::SingularWithinMatrix)?;
    let m = &l_inv * &h * l_inv.transpose();
    let (vals, _) = symmetric_eigen(&m);
    let lambdas: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();

    let wilks = lambdas.iter().map(|l| 1.0 / (1.0 + l)).product::<f64>();
    let pillai = lambdas.iter().map(|l| l / (1.0 + l)).sum::<f64>();
    let hotelling_lawley = lambdas.iter().sum::<f64>();
    let roy = lambdas.first().copied().unwrap_or(0.0);

    let (f_approx, df1, df2) = rao_f(wilks, q, groups - 1, n - groups);
    let p = if f_approx <= 0.0 || df2 <= 0.0 { 1.0 } else { FisherSnedecor::new(df1, df2).map(|d| d.sf(f_approx)).unwrap_or(1.0) };
    let decision = if p < 0.05 { ManovaDecision::Rejected } else { ManovaDecision::NotRejected };
    let eigenvalues = lambdas.iter().copied().filter(|&l| l > 1e-12 * roy.max(1e-300)).collect();
    Ok(ManovaResult { wilks, pillai, hotelling_lawley, roy, f_approx, df1, df2, p, decision, components: q, eigenvalues })
}

/// Rao's F for Wilks' lambda with `p` variables, `vh` hypothesis and `ve`
/// error degrees of freedom.
fn rao_f(wilks: f64, p: usize, vh: usize, ve: usize) -> (f64, f64, f64) {
    let (p, vh, ve) = (p as f64, vh as f64, ve as f64);
    let denom = p * p + vh * vh - 5.0;
    let t = if denom > 0.0 { ((p * p * vh * vh - 4.0) / denom).sqrt() } else { 1.0 };
    let w = ve + vh - (p + vh + 1.0) / 2.0;
    let df1 = p * vh;
    let df2 = w * t - (df1 - 2.0) / 2.0;
    let root = wilks.powf(1.0 / t);
    let f = if root > 0.0 { (1.0 - root) / root * df2 / df1 } else { f64::INFINITY };
    (f.max(0.0), df1, df2)
}
