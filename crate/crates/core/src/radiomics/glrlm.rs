//! Gray-level run-length matrices over the 13 unique 3D directions.

use super::discretize::LevelGrid;
use super::matrix::{size_features, GrayLevelMatrix};
use super::{Family, DIRECTIONS};
use crate::volume::Grid;

pub const FEATURES: [&str; 16] = [
    "short_run_emphasis",
    "long_run_emphasis",
    "low_gray_level_run_emphasis",
    "high_gray_level_run_emphasis",
    "short_run_low_gray_level_emphasis",
    "short_run_high_gray_level_emphasis",
    "long_run_low_gray_level_emphasis",
    "long_run_high_gray_level_emphasis",
    "gray_level_non_uniformity",
    "gray_level_non_uniformity_normalized",
    "run_length_non_uniformity",
    "run_length_non_uniformity_normalized",
    "run_percentage",
    "gray_level_variance",
    "run_length_variance",
    "run_entropy",
];

/// Runs of equal level along `dir`; columns are run lengths 1..=max dim.
pub fn glrlm(levels: &LevelGrid, dir: [isize; 3]) -> GrayLevelMatrix {
    let ng = levels.ng as usize;
    let longest = levels.dims.iter().copied().max().unwrap_or(1);
    let mut m = GrayLevelMatrix::zeros(Family::Glrlm, ng, longest);
    let [nx, ny, nz] = levels.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let l = levels.levels[levels.index(x, y, z)];
                if l == 0 {
                    continue;
                }
                let (x, y, z) = (x as isize, y as isize, z as isize);
                // Only start counting at the first voxel of a run.
                if levels.at(x - dir[0], y - dir[1], z - dir[2]) == l {
                    continue;
                }
                let mut len = 1;
                while levels.at(x + len as isize * dir[0], y + len as isize * dir[1], z + len as isize * dir[2]) == l {
                    len += 1;
                }
                m.add(l as usize - 1, len - 1, 1.0);
            }
        }
    }
    m
}

pub fn glrlms(levels: &LevelGrid) -> Vec<GrayLevelMatrix> {
    DIRECTIONS.iter().map(|&d| glrlm(levels, d)).collect()
}

/// `[averaged over directions…, merged…]`, 32 values. The merged run
/// percentage divides by ROI voxels times the number of directions.
pub fn glrlm_features(levels: &LevelGrid) -> Vec<f64> {
    let ms = glrlms(levels);
    let nv = levels.n_voxels as f64;
    let per: Vec<[f64; 16]> = ms.iter().map(|m| size_features(m, nv)).collect();
    let mut out: Vec<f64> = (0..16).map(|k| per.iter().map(|f| f[k]).sum::<f64>() / per.len() as f64).collect();
    out.extend(size_features(&GrayLevelMatrix::merged(&ms), nv * ms.len() as f64));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_run_along_y() {
        let g = LevelGrid::from_levels([1, 4, 1], vec![3; 4]);
        let m = glrlm(&g, [0, 1, 0]);
        assert_eq!(m.total(), 1.0);
        assert_eq!(m.get(2, 3), 1.0);
        let f = size_features(&m, 4.0);
        assert_eq!(f[10], 1.0);
        assert_eq!(f[1], 16.0);
        // Across the line every other direction sees four unit runs.
        assert_eq!(glrlm(&g, [1, 0, 0]).get(2, 0), 4.0);
    }

    #[test]
    fn run_counts_cover_every_voxel() {
        let g = LevelGrid::from_levels([3, 2, 2], vec![1, 1, 2, 0, 2, 2, 1, 2, 2, 1, 1, 1]);
        for m in glrlms(&g) {
            let covered: f64 = (0..m.rows).flat_map(|i| (0..m.cols).map(move |j| (i, j))).map(|(i, j)| m.get(i, j) * (j + 1) as f64).sum();
            assert_eq!(covered, g.n_voxels as f64);
        }
        assert_eq!(glrlm_features(&g).len(), 32);
    }
}
