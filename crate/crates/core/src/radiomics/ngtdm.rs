//! Neighbourhood gray-tone difference features.

use super::discretize::LevelGrid;
use super::NEIGHBOURS_26;
use crate::volume::Grid;

pub const FEATURES: [&str; 5] = ["coarseness", "contrast", "busyness", "complexity", "strength"];

/// Upper bound reported for coarseness when there is no gray-tone difference.
pub const COARSENESS_CAP: f64 = 1e6;

/// Per-level voxel count `n` and summed absolute difference `s` between each
/// voxel and the mean of its in-ROI 26-neighbours. Voxels without any in-ROI
/// neighbour are skipped.
pub fn ngtdm(g: &LevelGrid) -> (Vec<f64>, Vec<f64>) {
    let ng = g.ng as usize;
    let mut n = vec![0.0; ng];
    let mut s = vec![0.0; ng];
    let [nx, ny, nz] = g.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let l = g.levels[g.index(x, y, z)];
                if l == 0 {
                    continue;
                }
                let (mut sum, mut count) = (0.0, 0usize);
                for d in NEIGHBOURS_26 {
                    let q = g.at(x as isize + d[0], y as isize + d[1], z as isize + d[2]);
                    if q > 0 {
                        sum += q as f64;
                        count += 1;
                    }
                }
                if count == 0 {
                    continue;
                }
                n[l as usize - 1] += 1.0;
                s[l as usize - 1] += (l as f64 - sum / count as f64).abs();
            }
        }
    }
    (n, s)
}

pub fn ngtdm_features(g: &LevelGrid) -> Vec<f64> {
    let (n, s) = ngtdm(g);
    let nvc: f64 = n.iter().sum();
    if nvc == 0.0 {
        return vec![f64::NAN; 5];
    }
    let p: Vec<f64> = n.iter().map(|v| v / nvc).collect();
    let present: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let ngp = present.len() as f64;
    let ps: f64 = p.iter().zip(&s).map(|(a, b)| a * b).sum();
    let s_total: f64 = s.iter().sum();

    let coarseness = if ps > 0.0 { (1.0 / ps).min(COARSENESS_CAP) } else { COARSENESS_CAP };
    let (mut pair_sq, mut busy_den, mut complexity, mut strength_num) = (0.0, 0.0, 0.0, 0.0);
    for &i in &present {
        for &j in &present {
            let (gi, gj) = ((i + 1) as f64, (j + 1) as f64);
            let d = gi - gj;
            pair_sq += p[i] * p[j] * d * d;
            busy_den += (gi * p[i] - gj * p[j]).abs();
            complexity += d.abs() * (p[i] * s[i] + p[j] * s[j]) / (p[i] + p[j]);
            strength_num += (p[i] + p[j]) * d * d;
        }
    }
    let contrast = if ngp > 1.0 { pair_sq / (ngp * (ngp - 1.0)) * s_total / nvc } else { 0.0 };
    let busyness = if busy_den > 0.0 { ps / busy_den } else { 0.0 };
    let strength = if s_total > 0.0 { strength_num / s_total } else { 0.0 };
    vec![coarseness, contrast, busyness, complexity / nvc, strength]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_roi() {
        let g = LevelGrid::from_levels([3, 3, 3], vec![4; 27]);
        let f = ngtdm_features(&g);
        assert_eq!(f[0], COARSENESS_CAP);
        assert_eq!(f[1], 0.0);
        assert!(f.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn two_voxel_pair() {
        let g = LevelGrid::from_levels([2, 1, 1], vec![1, 3]);
        let (n, s) = ngtdm(&g);
        assert_eq!(n, vec![1.0, 0.0, 1.0]);
        assert_eq!(s, vec![2.0, 0.0, 2.0]);
        let f = ngtdm_features(&g);
        // Σ p·s = 2, so coarseness 0.5; contrast = (2·0.25·4 / 2)·(4 / 2) = 2.
        assert_eq!(f[0], 0.5);
        assert_eq!(f[1], 2.0);
    }
}
