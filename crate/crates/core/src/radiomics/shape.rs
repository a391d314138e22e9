//! Morphology of the ROI mask: volume, surface, diameters and axis lengths.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::volume::{Grid, MaskVolume};

pub const FEATURES: [&str; 28] = [
    "volume",
    "voxel_count",
    "surface_area",
    "surface_volume_ratio",
    "compactness_1",
    "compactness_2",
    "spherical_disproportion",
    "sphericity",
    "asphericity",
    "max_3d_diameter",
    "max_2d_diameter_axial",
    "max_2d_diameter_coronal",
    "max_2d_diameter_sagittal",
    "major_axis_length",
    "minor_axis_length",
    "least_axis_length",
    "elongation",
    "flatness",
    "volume_density_aabb",
    "area_density_aabb",
    "volume_density_aee",
    "area_density_aee",
    "extent_x",
    "extent_y",
    "extent_z",
    "surface_voxel_count",
    "mean_radius",
    "radius_std",
];

const FACE_NEIGHBOURS: [[isize; 3]; 6] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];

fn max_pairwise(points: &[[f64; 3]]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
            best = best.max(d);
        }
    }
    best.sqrt()
}

/// Largest in-plane diameter over slices perpendicular to `axis`.
fn max_planar(points: &[[f64; 3]], keys: &[usize], axis: usize) -> f64 {
    let mut slices: BTreeMap<usize, Vec<[f64; 3]>> = BTreeMap::new();
    for (p, k) in points.iter().zip(keys) {
        let mut q = *p;
        q[axis] = 0.0;
        slices.entry(*k).or_default().push(q);
    }
    slices.values().map(|s| max_pairwise(s)).fold(0.0, f64::max)
}

/// Ellipsoid surface area (Thomsen's approximation, relative error < 1.1%).
fn ellipsoid_area(a: f64, b: f64, c: f64) -> f64 {
    const P: f64 = 1.6075;
    4.0 * PI * (((a * b).powf(P) + (a * c).powf(P) + (b * c).powf(P)) / 3.0).powf(1.0 / P)
}

/// Shape features in registry order. The mask must be non-empty; degenerate
/// ratios come out as NaN for the caller's policy.
pub fn shape_features(mask: &MaskVolume, spacing: [f64; 3]) -> Vec<f64> {
    let [nx, ny, nz] = mask.header.dims;
    let face_area = [spacing[1] * spacing[2], spacing[0] * spacing[2], spacing[0] * spacing[1]];
    let voxel_volume = spacing.iter().product::<f64>();

    let mut count = 0usize;
    let mut area = 0.0;
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut sum = [0.0; 3];
    let mut surface: Vec<[f64; 3]> = Vec::new();
    let mut surface_idx: Vec<[usize; 3]> = Vec::new();
    let mut coords: Vec<[f64; 3]> = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if !mask.get(x, y, z) {
                    continue;
                }
                count += 1;
                let c = [x, y, z];
                let p = [x as f64 * spacing[0], y as f64 * spacing[1], z as f64 * spacing[2]];
                for k in 0..3 {
                    lo[k] = lo[k].min(c[k]);
                    hi[k] = hi[k].max(c[k]);
                    sum[k] += p[k];
                }
                let mut exposed = false;
                for (f, d) in FACE_NEIGHBOURS.iter().enumerate() {
                    let (qx, qy, qz) = (x as isize + d[0], y as isize + d[1], z as isize + d[2]);
                    if !mask.in_bounds(qx, qy, qz) || !mask.get(qx as usize, qy as usize, qz as usize) {
                        area += face_area[f / 2];
                        exposed = true;
                    }
                }
                if exposed {
                    surface.push(p);
                    surface_idx.push(c);
                }
                coords.push(p);
            }
        }
    }
    let n = count as f64;
    let v = n * voxel_volume;
    let a = area;
    let centroid = [sum[0] / n, sum[1] / n, sum[2] / n];

    let mut cov = Matrix3::<f64>::zeros();
    for p in &coords {
        let d = [p[0] - centroid[0], p[1] - centroid[1], p[2] - centroid[2]];
        for i in 0..3 {
            for j in 0..3 {
                cov[(i, j)] += d[i] * d[j] / n;
            }
        }
    }
    let mut eig: Vec<f64> = cov.symmetric_eigenvalues().iter().map(|l| l.max(0.0)).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let (l1, l2, l3) = (eig[0], eig[1], eig[2]);
    let (sa, sb, sc) = (2.0 * l1.sqrt(), 2.0 * l2.sqrt(), 2.0 * l3.sqrt());

    let extent: Vec<f64> = (0..3).map(|k| (hi[k] - lo[k] + 1) as f64 * spacing[k]).collect();
    let aabb_area = 2.0 * (extent[0] * extent[1] + extent[0] * extent[2] + extent[1] * extent[2]);

    let radii: Vec<f64> = surface
        .iter()
        .map(|p| ((p[0] - centroid[0]).powi(2) + (p[1] - centroid[1]).powi(2) + (p[2] - centroid[2]).powi(2)).sqrt())
        .collect();
    let mean_radius = radii.iter().sum::<f64>() / radii.len() as f64;
    let radius_std = (radii.iter().map(|r| (r - mean_radius).powi(2)).sum::<f64>() / radii.len() as f64).sqrt();

    let key = |axis: usize| surface_idx.iter().map(|c| c[axis]).collect::<Vec<_>>();
    let sphericity = (36.0 * PI * v * v).cbrt() / a;
    vec![
        v,
        n,
        a,
        a / v,
        v / (PI.sqrt() * a.powf(1.5)),
        36.0 * PI * v * v / a.powi(3),
        1.0 / sphericity,
        sphericity,
        1.0 / sphericity - 1.0,
        max_pairwise(&surface),
        max_planar(&surface, &key(2), 2),
        max_planar(&surface, &key(1), 1),
        max_planar(&surface, &key(0), 0),
        4.0 * l1.sqrt(),
        4.0 * l2.sqrt(),
        4.0 * l3.sqrt(),
        (l2 / l1).sqrt(),
        (l3 / l1).sqrt(),
        v / extent.iter().product::<f64>(),
        a / aabb_area,
        v / (4.0 * PI * sa * sb * sc / 3.0),
        a / ellipsoid_area(sa, sb, sc),
        extent[0],
        extent[1],
        extent[2],
        surface.len() as f64,
        mean_radius,
        radius_std,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(f: &[f64], name: &str) -> f64 {
        f[FEATURES.iter().position(|n| *n == name).unwrap()]
    }

    #[test]
    fn single_voxel() {
        let mut m = MaskVolume::empty([3, 3, 3]);
        m.set(1, 1, 1, true);
        let f = shape_features(&m, [1.0; 3]);
        assert_eq!(f.len(), FEATURES.len());
        assert_eq!(at(&f, "volume"), 1.0);
        assert_eq!(at(&f, "surface_area"), 6.0);
        assert_eq!(at(&f, "max_3d_diameter"), 0.0);
    }

    #[test]
    fn cube_of_ten() {
        let m = MaskVolume::from_fn([12, 12, 12], |x, y, z| (1..11).contains(&x) && (1..11).contains(&y) && (1..11).contains(&z));
        let f = shape_features(&m, [1.0; 3]);
        assert_eq!(at(&f, "volume"), 1000.0);
        assert_eq!(at(&f, "surface_area"), 600.0);
        let expected = PI.cbrt() * 6000f64.powf(2.0 / 3.0) / 600.0;
        assert!((at(&f, "sphericity") - expected).abs() < 1e-12);
        assert!((at(&f, "sphericity") - 0.806).abs() < 1e-3);
        assert!((at(&f, "max_3d_diameter") - 243f64.sqrt()).abs() < 1e-12);
        assert!((at(&f, "max_2d_diameter_axial") - 162f64.sqrt()).abs() < 1e-12);
        assert_eq!(at(&f, "volume_density_aabb"), 1.0);
        assert!((at(&f, "elongation") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anisotropic_spacing_scales_faces() {
        let m = MaskVolume::from_fn([1, 1, 1], |_, _, _| true);
        let f = shape_features(&m, [2.0, 3.0, 4.0]);
        assert_eq!(at(&f, "volume"), 24.0);
        assert_eq!(at(&f, "surface_area"), 2.0 * (12.0 + 8.0 + 6.0));
    }
}
