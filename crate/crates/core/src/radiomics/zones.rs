//! Size-zone and distance-zone matrices. Zones are 26-connected groups of
//! equal gray level.

use std::collections::VecDeque;

use super::discretize::LevelGrid;
use super::matrix::{size_features, GrayLevelMatrix};
use super::{Family, NEIGHBOURS_26};
use crate::volume::Grid;

pub const GLSZM_FEATURES: [&str; 16] = [
    "small_zone_emphasis",
    "large_zone_emphasis",
    "low_gray_level_zone_emphasis",
    "high_gray_level_zone_emphasis",
    "small_zone_low_gray_level_emphasis",
    "small_zone_high_gray_level_emphasis",
    "large_zone_low_gray_level_emphasis",
    "large_zone_high_gray_level_emphasis",
    "gray_level_non_uniformity",
    "gray_level_non_uniformity_normalized",
    "zone_size_non_uniformity",
    "zone_size_non_uniformity_normalized",
    "zone_percentage",
    "gray_level_variance",
    "zone_size_variance",
    "zone_size_entropy",
];

pub const GLDZM_FEATURES: [&str; 16] = [
    "small_distance_emphasis",
    "large_distance_emphasis",
    "low_gray_level_zone_emphasis",
    "high_gray_level_zone_emphasis",
    "small_distance_low_gray_level_emphasis",
    "small_distance_high_gray_level_emphasis",
    "large_distance_low_gray_level_emphasis",
    "large_distance_high_gray_level_emphasis",
    "gray_level_non_uniformity",
    "gray_level_non_uniformity_normalized",
    "zone_distance_non_uniformity",
    "zone_distance_non_uniformity_normalized",
    "zone_percentage",
    "gray_level_variance",
    "zone_distance_variance",
    "zone_distance_entropy",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Zone {
    pub level: u32,
    pub size: usize,
    /// Smallest border distance over the zone's voxels.
    pub distance: u32,
}

fn neighbours(g: &LevelGrid, i: usize) -> impl Iterator<Item = Option<usize>> + '_ {
    let [x, y, z] = g.coords(i);
    NEIGHBOURS_26.iter().map(move |d| {
        let (qx, qy, qz) = (x as isize + d[0], y as isize + d[1], z as isize + d[2]);
        g.in_bounds(qx, qy, qz).then(|| g.index(qx as usize, qy as usize, qz as usize))
    })
}

/// Chebyshev distance from each ROI voxel to the nearest voxel outside the
/// ROI, where everything beyond the grid counts as outside. 0 off-ROI.
pub fn border_distance(g: &LevelGrid) -> Vec<u32> {
    let mut dist = vec![0u32; g.levels.len()];
    let mut queue = VecDeque::new();
    for i in 0..g.levels.len() {
        if g.levels[i] == 0 {
            continue;
        }
        if neighbours(g, i).any(|n| n.map_or(true, |j| g.levels[j] == 0)) {
            dist[i] = 1;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let next = dist[i] + 1;
        for j in neighbours(g, i).flatten() {
            if g.levels[j] != 0 && dist[j] == 0 {
                dist[j] = next;
                queue.push_back(j);
            }
        }
    }
    dist
}

/// Zones in raster order of their first voxel.
pub fn zones(g: &LevelGrid) -> Vec<Zone> {
    let dist = border_distance(g);
    let mut seen = vec![false; g.levels.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..g.levels.len() {
        let level = g.levels[start];
        if level == 0 || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut zone = Zone { level, size: 0, distance: u32::MAX };
        while let Some(i) = queue.pop_front() {
            zone.size += 1;
            zone.distance = zone.distance.min(dist[i]);
            for j in neighbours(g, i).flatten() {
                if !seen[j] && g.levels[j] == level {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        out.push(zone);
    }
    out
}

pub fn glszm(g: &LevelGrid, zones: &[Zone]) -> GrayLevelMatrix {
    let largest = zones.iter().map(|z| z.size).max().unwrap_or(1);
    let mut m = GrayLevelMatrix::zeros(Family::Glszm, g.ng as usize, largest);
    for z in zones {
        m.add(z.level as usize - 1, z.size - 1, 1.0);
    }
    m
}

pub fn gldzm(g: &LevelGrid, zones: &[Zone]) -> GrayLevelMatrix {
    let farthest = zones.iter().map(|z| z.distance as usize).max().unwrap_or(1);
    let mut m = GrayLevelMatrix::zeros(Family::Gldzm, g.ng as usize, farthest);
    for z in zones {
        m.add(z.level as usize - 1, z.distance as usize - 1, 1.0);
    }
    m
}

/// 16 size-zone then 16 distance-zone features.
pub fn zone_features(g: &LevelGrid) -> (Vec<f64>, Vec<f64>) {
    let zs = zones(g);
    let nv = g.n_voxels as f64;
    (size_features(&glszm(g, &zs), nv).to_vec(), size_features(&gldzm(g, &zs), nv).to_vec())
}
