//! Neighbouring gray-level dependence matrix (α = 0, Chebyshev radius 1).

use super::discretize::LevelGrid;
use super::matrix::{size_features, GrayLevelMatrix};
use super::{Family, NEIGHBOURS_26};
use crate::volume::Grid;

pub const FEATURES: [&str; 17] = [
    "low_dependence_emphasis",
    "high_dependence_emphasis",
    "low_gray_level_count_emphasis",
    "high_gray_level_count_emphasis",
    "low_dependence_low_gray_level_emphasis",
    "low_dependence_high_gray_level_emphasis",
    "high_dependence_low_gray_level_emphasis",
    "high_dependence_high_gray_level_emphasis",
    "gray_level_non_uniformity",
    "gray_level_non_uniformity_normalized",
    "dependence_count_non_uniformity",
    "dependence_count_non_uniformity_normalized",
    "dependence_count_percentage",
    "gray_level_variance",
    "dependence_count_variance",
    "dependence_count_entropy",
    "dependence_count_energy",
];

/// Column `j` counts ROI voxels with `j` equal-level voxels in their
/// neighbourhood, the centre included (so dependence ≥ 1).
pub fn ngldm(g: &LevelGrid) -> GrayLevelMatrix {
    let mut m = GrayLevelMatrix::zeros(Family::Ngldm, g.ng as usize, NEIGHBOURS_26.len() + 1);
    let [nx, ny, nz] = g.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let l = g.levels[g.index(x, y, z)];
                if l == 0 {
                    continue;
                }
                let same = NEIGHBOURS_26.iter().filter(|d| g.at(x as isize + d[0], y as isize + d[1], z as isize + d[2]) == l).count();
                m.add(l as usize - 1, same, 1.0);
            }
        }
    }
    m
}

pub fn ngldm_features(g: &LevelGrid) -> Vec<f64> {
    let m = ngldm(g);
    let mut out = size_features(&m, g.n_voxels as f64).to_vec();
    out.push(m.probabilities().iter().map(|p| p * p).sum());
    out
}
