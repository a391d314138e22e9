//! Embedding reducers: PCA, Ward feature agglomeration, random projections.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DimredError, Transform};
use crate::features::FeatureMatrix;
use crate::linalg::{covariance, symmetric_eigen};

/// Leading eigenvectors of the sample covariance, by descending eigenvalue.
pub fn pca(x: &FeatureMatrix, k: usize) -> Result<Transform, DimredError> {
    if k > x.n_cols() {
        return Err(DimredError::KTooLarge { k, available: x.n_cols() });
    }
    let (center, cov) = covariance(x.data(), x.n_rows(), x.n_cols());
    let (_, vectors) = symmetric_eigen(&cov);
    let weights = (0..k).map(|c| vectors.column(c).iter().copied().collect()).collect();
    Ok(Transform::Project { center, weights })
}

/// Explained-variance ratios of all principal components.
pub fn explained_variance_ratio(x: &FeatureMatrix) -> Vec<f64> {
    let (_, cov) = covariance(x.data(), x.n_rows(), x.n_cols());
    let (values, _) = symmetric_eigen(&cov);
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    values.iter().map(|v| v.max(0.0) / total).collect()
}

/// Ward agglomeration of standardized columns down to `k` clusters, via the
/// Lance–Williams update on squared Euclidean distances. Clusters are ordered
/// by their smallest member.
pub fn agglomerate(x: &FeatureMatrix, k: usize) -> Transform {
    let n = x.n_rows() as f64;
    let p = x.n_cols();
    let mut mean = vec![0.0; p];
    let mut scale = vec![1.0; p];
    let mut cols = Vec::with_capacity(p);
    for j in 0..p {
        let c = x.column(j);
        let m = c.iter().sum::<f64>() / n;
        let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
        mean[j] = m;
        if sd > 0.0 {
            scale[j] = sd;
        }
        cols.push(c.iter().map(|v| (v - m) / scale[j]).collect::<Vec<f64>>());
    }
    let mut d = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in i + 1..p {
            let v: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| (a - b).powi(2)).sum();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let mut clusters: Vec<Option<Vec<usize>>> = (0..p).map(|j| Some(vec![j])).collect();
    let mut alive = p;
    while alive > k {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..p {
            if clusters[i].is_none() {
                continue;
            }
            for j in i + 1..p {
                if clusters[j].is_some() && d[i][j] < best.0 {
                    best = (d[i][j], i, j);
                }
            }
        }
        let (_, a, b) = best;
        let na = clusters[a].as_ref().map_or(0, Vec::len) as f64;
        let nb = clusters[b].as_ref().map_or(0, Vec::len) as f64;
        for c in 0..p {
            if c == a || c == b || clusters[c].is_none() {
                continue;
            }
            let nc = clusters[c].as_ref().map_or(0, Vec::len) as f64;
            let v = ((na + nc) * d[c][a] + (nb + nc) * d[c][b] - nc * d[a][b]) / (na + nb + nc);
            d[c][a] = v;
            d[a][c] = v;
        }
        let moved = clusters[b].take().unwrap_or_default();
        if let Some(ca) = clusters[a].as_mut() {
            ca.extend(moved);
            ca.sort_unstable();
        }
        alive -= 1;
    }
    let clusters: Vec<Vec<usize>> = clusters.into_iter().flatten().collect();
    Transform::Agglomerate { mean, scale, clusters }
}

pub fn gaussian_projection(p: usize, k: usize, seed: u64) -> Transform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = (1.0 / k as f64).sqrt();
    let weights =
        (0..k).map(|_| (0..p).map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect()).collect();
    Transform::Project { center: vec![0.0; p], weights }
}

/// Achlioptas-style sparse projection with density `1/√p`.
pub fn sparse_projection(p: usize, k: usize, seed: u64) -> Transform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let density = 1.0 / (p as f64).sqrt();
    let v = (1.0 / (density * k as f64)).sqrt();
    let weights = (0..k)
        .map(|_| {
            (0..p)
                .map(|_| {
                    let u: f64 = rng.random();
                    if u < density / 2.0 {
                        v
                    } else if u < density {
                        -v
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Transform::Project { center: vec![0.0; p], weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_in_five_dimensions_is_one_component() {
        let dir = [1.0, -2.0, 0.5, 3.0, 0.0];
        let x = FeatureMatrix::from_unnamed_rows((0..20).map(|i| dir.iter().map(|d| d * (i as f64 - 7.0)).collect()).collect());
        let ratio = explained_variance_ratio(&x);
        assert!((ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ward_groups_duplicated_columns() {
        let x = FeatureMatrix::from_unnamed_rows(
            (0..12)
                .map(|i| {
                    let t = i as f64;
                    vec![t, (t * 0.9).sin(), 2.0 * t + 1.0, (t * 0.9).sin() * 3.0]
                })
                .collect(),
        );
        match agglomerate(&x, 2) {
            Transform::Agglomerate { clusters, .. } => assert_eq!(clusters, vec![vec![0, 2], vec![1, 3]]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sparse_projection_density() {
        let Transform::Project { weights, .. } = sparse_projection(400, 50, 1) else { unreachable!() };
        let nonzero = weights.iter().flatten().filter(|v| **v != 0.0).count() as f64 / 20000.0;
        assert!((nonzero - 0.05).abs() < 0.01, "{nonzero}");
    }
}
