//! Gray-level co-occurrence matrices at distance 1 over the 13 unique 3D
//! directions.

use super::discretize::LevelGrid;
use super::matrix::{entropy, GrayLevelMatrix};
use super::{Family, DIRECTIONS};
use crate::volume::Grid;

pub const FEATURES: [&str; 25] = [
    "joint_maximum",
    "joint_average",
    "joint_variance",
    "joint_entropy",
    "difference_average",
    "difference_variance",
    "difference_entropy",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "angular_second_moment",
    "contrast",
    "dissimilarity",
    "inverse_difference",
    "inverse_difference_normalized",
    "inverse_difference_moment",
    "inverse_difference_moment_normalized",
    "inverse_variance",
    "correlation",
    "autocorrelation",
    "cluster_tendency",
    "cluster_shade",
    "cluster_prominence",
    "information_correlation_1",
    "information_correlation_2",
];

/// Symmetric co-occurrence counts for one offset.
pub fn glcm(levels: &LevelGrid, offset: [isize; 3]) -> GrayLevelMatrix {
    let ng = levels.ng as usize;
    let mut m = GrayLevelMatrix::zeros(Family::Glcm, ng, ng);
    let [nx, ny, nz] = levels.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let a = levels.levels[levels.index(x, y, z)];
                if a == 0 {
                    continue;
                }
                let b = levels.at(x as isize + offset[0], y as isize + offset[1], z as isize + offset[2]);
                if b == 0 {
                    continue;
                }
                m.add(a as usize - 1, b as usize - 1, 1.0);
                m.add(b as usize - 1, a as usize - 1, 1.0);
            }
        }
    }
    m
}

pub fn glcms(levels: &LevelGrid) -> Vec<GrayLevelMatrix> {
    DIRECTIONS.iter().map(|&d| glcm(levels, d)).collect()
}

/// Features of one co-occurrence matrix; NaN everywhere when it is empty.
pub fn features(m: &GrayLevelMatrix) -> [f64; 25] {
    let ng = m.rows;
    if m.total() <= 0.0 {
        return [f64::NAN; 25];
    }
    let p = m.probabilities();
    let at = |i: usize, j: usize| p[i * ng + j];
    let ngf = ng as f64;

    let mut px = vec![0.0; ng];
    let mut diff = vec![0.0; ng];
    let mut sum = vec![0.0; 2 * ng + 1];
    let mut out = [0.0f64; 25];
    for i in 0..ng {
        for j in 0..ng {
            let v = at(i, j);
            if v == 0.0 {
                continue;
            }
            let (gi, gj) = ((i + 1) as f64, (j + 1) as f64);
            let k = i.abs_diff(j);
            let kf = k as f64;
            px[i] += v;
            diff[k] += v;
            sum[i + j + 2] += v;
            out[0] = out[0].max(v);
            out[1] += gi * v;
            out[10] += v * v;
            out[11] += kf * kf * v;
            out[12] += kf * v;
            out[13] += v / (1.0 + kf);
            out[14] += v / (1.0 + kf / ngf);
            out[15] += v / (1.0 + kf * kf);
            out[16] += v / (1.0 + kf * kf / (ngf * ngf));
            out[19] += gi * gj * v;
        }
    }
    let mu = out[1];
    let mut sigma2 = 0.0;
    let mut covariance = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            let v = at(i, j);
            if v == 0.0 {
                continue;
            }
            let (di, dj) = ((i + 1) as f64 - mu, (j + 1) as f64 - mu);
            sigma2 += di * di * v;
            covariance += di * dj * v;
            let c = di + dj;
            out[20] += c * c * v;
            out[21] += c * c * c * v;
            out[22] += c * c * c * c * v;
        }
    }
    out[2] = sigma2;
    out[3] = entropy(p.iter().copied());
    out[4] = diff.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    out[5] = diff.iter().enumerate().map(|(k, v)| (k as f64 - out[4]).powi(2) * v).sum();
    out[6] = entropy(diff.iter().copied());
    out[7] = sum.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    out[8] = sum.iter().enumerate().map(|(k, v)| (k as f64 - out[7]).powi(2) * v).sum();
    out[9] = entropy(sum.iter().copied());
    out[17] = diff.iter().enumerate().skip(1).map(|(k, v)| v / (k * k) as f64).sum();
    // Zero marginal variance: correlation is undefined (NaN → flagged 0).
    out[18] = covariance / sigma2;

    let hxy = out[3];
    let hx = entropy(px.iter().copied());
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            let q = px[i] * px[j];
            if q > 0.0 {
                hxy1 -= at(i, j) * q.log2();
                hxy2 -= q * q.log2();
            }
        }
    }
    out[23] = if hx > 0.0 { (hxy - hxy1) / hx } else { f64::NAN };
    out[24] = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt();
    out
}

/// `[averaged over directions…, merged…]`, 50 values.
pub fn glcm_features(levels: &LevelGrid) -> Vec<f64> {
    let ms = glcms(levels);
    let per: Vec<[f64; 25]> = ms.iter().filter(|m| m.total() > 0.0).map(features).collect();
    let mut out: Vec<f64> =
        (0..25).map(|k| if per.is_empty() { f64::NAN } else { per.iter().map(|f| f[k]).sum::<f64>() / per.len() as f64 }).collect();
    out.extend(features(&GrayLevelMatrix::merged(&ms)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_slab() {
        // Rows along y: y = 0 holds [1, 1], y = 1 holds [2, 2].
        let g = LevelGrid::from_levels([2, 2, 1], vec![1, 1, 2, 2]);
        let m = glcm(&g, [1, 0, 0]);
        assert_eq!(m.counts, vec![2.0, 0.0, 0.0, 2.0]);
        assert_eq!(m.probabilities(), vec![0.5, 0.0, 0.0, 0.5]);
        let f = features(&m);
        assert_eq!(f[11], 0.0);
        assert_eq!(f[0], 0.5);
        assert_eq!(f[10], 0.5);
        assert!((f[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_level_is_defined_or_nan() {
        let g = LevelGrid::from_levels([3, 3, 3], vec![1; 27]);
        let f = glcm_features(&g);
        assert_eq!(f.len(), 50);
        assert_eq!(f[11], 0.0);
        assert_eq!(f[0], 1.0);
        assert!(f[18].is_nan());
    }
}
