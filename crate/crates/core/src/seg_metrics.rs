//! Geometric agreement between a reference and a candidate mask.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::descriptive::percentile_sorted;
pub use crate::stats::descriptive::MeanStd;
use crate::volume::{Grid, MaskVolume};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("mask dims differ: {0:?} vs {1:?}")]
    DimMismatch([usize; 3], [usize; 3]),
    #[error("Hausdorff distance needs two nonempty masks")]
    EmptyMask,
}

fn check_dims(a: &MaskVolume, b: &MaskVolume) -> Result<(), MetricsError> {
    if a.header.dims != b.header.dims {
        return Err(MetricsError::DimMismatch(a.header.dims, b.header.dims));
    }
    Ok(())
}

fn overlap_counts(a: &MaskVolume, b: &MaskVolume) -> (usize, usize, usize) {
    let mut inter = 0;
    let mut na = 0;
    let mut nb = 0;
    for (&x, &y) in a.voxels.iter().zip(&b.voxels) {
        na += x as usize;
        nb += y as usize;
        inter += (x & y) as usize;
    }
    (inter, na, nb)
}

/// `2|A∩B| / (|A|+|B|)`; 1.0 when both masks are empty.
pub fn dice(a: &MaskVolume, b: &MaskVolume) -> Result<f64, MetricsError> {
    check_dims(a, b)?;
    let (inter, na, nb) = overlap_counts(a, b);
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

/// `|A∩B| / |A∪B|`; 1.0 when both masks are empty.
pub fn iou(a: &MaskVolume, b: &MaskVolume) -> Result<f64, MetricsError> {
    check_dims(a, b)?;
    let (inter, na, nb) = overlap_counts(a, b);
    let union = na + nb - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Foreground voxels with a background 6-neighbour or lying on the grid border.
pub fn surface_voxels(mask: &MaskVolume) -> Vec<usize> {
    let [nx, ny, nz] = mask.header.dims;
    let mut out = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if !mask.get(x, y, z) {
                    continue;
                }
                let border = x == 0 || y == 0 || z == 0 || x + 1 == nx || y + 1 == ny || z + 1 == nz;
                let exposed = border
                    || !mask.get(x - 1, y, z)
                    || !mask.get(x + 1, y, z)
                    || !mask.get(x, y - 1, z)
                    || !mask.get(x, y + 1, z)
                    || !mask.get(x, y, z - 1)
                    || !mask.get(x, y, z + 1);
                if exposed {
                    out.push(mask.index(x, y, z));
                }
            }
        }
    }
    out
}

/// One pass of the Felzenszwalb–Huttenlocher squared distance transform
/// along a line with sample spacing `h`.
fn edt_1d(f: &[f64], h: f64, out: &mut [f64], v: &mut [usize], zb: &mut [f64]) {
    let n = f.len();
    let pos = |q: usize| q as f64 * h;
    let mut k = 0usize;
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(p) => p,
        None => {
            out.iter_mut().for_each(|o| *o = f64::INFINITY);
            return;
        }
    };
    v[0] = first;
    zb[0] = f64::NEG_INFINITY;
    zb[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        let intersect = |p: usize| ((f[q] + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p))) / (2.0 * (pos(q) - pos(p)));
        let mut s = intersect(v[k]);
        // zb[0] is -inf, so k never underflows.
        while s <= zb[k] {
            k -= 1;
            s = intersect(v[k]);
        }
        k += 1;
        v[k] = q;
        zb[k] = s;
        zb[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while zb[k + 1] < pos(q) {
            k += 1;
        }
        let d = pos(q) - pos(v[k]);
        *o = d * d + f[v[k]];
    }
}

/// Exact squared Euclidean distance from every voxel to the nearest seed.
pub fn squared_distance_transform(dims: [usize; 3], seeds: &[usize], spacing: [f64; 3]) -> Vec<f64> {
    let [nx, ny, nz] = dims;
    let mut grid = vec![f64::INFINITY; nx * ny * nz];
    for &s in seeds {
        grid[s] = 0.0;
    }
    let maxn = nx.max(ny).max(nz);
    let mut line = vec![0.0; maxn];
    let mut out = vec![0.0; maxn];
    let mut v = vec![0usize; maxn];
    let mut zb = vec![0.0; maxn + 1];
    let idx = |x: usize, y: usize, z: usize| x + nx * (y + ny * z);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                line[x] = grid[idx(x, y, z)];
            }
            edt_1d(&line[..nx], spacing[0], &mut out[..nx], &mut v, &mut zb);
            for x in 0..nx {
                grid[idx(x, y, z)] = out[x];
            }
        }
    }
    for z in 0..nz {
        for x in 0..nx {
            for y in 0..ny {
                line[y] = grid[idx(x, y, z)];
            }
            edt_1d(&line[..ny], spacing[1], &mut out[..ny], &mut v, &mut zb);
            for y in 0..ny {
                grid[idx(x, y, z)] = out[y];
            }
        }
    }
    for y in 0..ny {
        for x in 0..nx {
            for z in 0..nz {
                line[z] = grid[idx(x, y, z)];
            }
            edt_1d(&line[..nz], spacing[2], &mut out[..nz], &mut v, &mut zb);
            for z in 0..nz {
                grid[idx(x, y, z)] = out[z];
            }
        }
    }
    grid
}

/// Linear-interpolation percentile of an unsorted sample (0..=100).
pub(crate) fn percentile(values: &mut [f64], p: f64) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    percentile_sorted(values, p)
}

/// Directed surface-to-surface distances A→B and B→A, pooled.
fn pooled_surface_distances(a: &MaskVolume, b: &MaskVolume, spacing: [f64; 3]) -> Result<Vec<f64>, MetricsError> {
    check_dims(a, b)?;
    let sa = surface_voxels(a);
    let sb = surface_voxels(b);
    if sa.is_empty() || sb.is_empty() {
        return Err(MetricsError::EmptyMask);
    }
    let dims = a.header.dims;
    let to_b = squared_distance_transform(dims, &sb, spacing);
    let to_a = squared_distance_transform(dims, &sa, spacing);
    let mut d: Vec<f64> = sa.iter().map(|&i| to_b[i].sqrt()).collect();
    d.extend(sb.iter().map(|&i| to_a[i].sqrt()));
    Ok(d)
}

/// Symmetric surface Hausdorff distance in voxel units. `percentile < 100`
/// gives the percentile of the pooled directed distances (HD95 at 95).
pub fn hausdorff(a: &MaskVolume, b: &MaskVolume, percentile_rank: f64) -> Result<f64, MetricsError> {
    hausdorff_scaled(a, b, percentile_rank, [1.0; 3])
}

/// As [`hausdorff`] with per-axis voxel spacing (e.g. millimetres).
pub fn hausdorff_scaled(a: &MaskVolume, b: &MaskVolume, percentile_rank: f64, spacing: [f64; 3]) -> Result<f64, MetricsError> {
    let mut d = pooled_surface_distances(a, b, spacing)?;
    if percentile_rank >= 100.0 {
        return Ok(d.iter().copied().fold(0.0, f64::max));
    }
    Ok(percentile(&mut d, percentile_rank))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ScoreFlags {
    /// Both masks empty; Dice and IoU set to 1.0 by convention.
    pub both_empty: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricScores {
    pub dice: f64,
    pub iou: f64,
    pub hausdorff: f64,
    pub hd95: f64,
    pub flags: ScoreFlags,
}

pub fn score_pair(gt: &MaskVolume, candidate: &MaskVolume, spacing: Option<[f64; 3]>) -> Result<GeometricScores, MetricsError> {
    check_dims(gt, candidate)?;
    let spacing = spacing.unwrap_or([1.0; 3]);
    let dice_v = dice(gt, candidate)?;
    let iou_v = iou(gt, candidate)?;
    let mut d = pooled_surface_distances(gt, candidate, spacing)?;
    let hd = d.iter().copied().fold(0.0, f64::max);
    let hd95 = percentile(&mut d, 95.0);
    Ok(GeometricScores { dice: dice_v, iou: iou_v, hausdorff: hd, hd95, flags: ScoreFlags::default() })
}

#[derive(Debug, Clone)]
pub struct BatchCase<'a> {
    pub case_id: String,
    pub model: String,
    pub gt: &'a MaskVolume,
    pub candidate: &'a MaskVolume,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseScore {
    pub case_id: String,
    pub model: String,
    pub scores: Result<GeometricScores, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchScoreSummary {
    pub dice: MeanStd,
    pub iou: MeanStd,
    pub hausdorff: MeanStd,
    pub hd95: MeanStd,
    /// Rows that produced scores.
    pub valid_cases: usize,
    pub cases: Vec<CaseScore>,
}

/// Scores every case; failures stay in their row and are excluded from the
/// summary statistics.
pub fn evaluate_batch(cases: &[BatchCase<'_>], spacing: Option<[f64; 3]>) -> BatchScoreSummary {
    let rows: Vec<CaseScore> = cases
        .par_iter()
        .map(|c| CaseScore {
            case_id: c.case_id.clone(),
            model: c.model.clone(),
            scores: score_pair(c.gt, c.candidate, spacing).map_err(|e| e.to_string()),
        })
        .collect();
    let valid: Vec<&GeometricScores> = rows.iter().filter_map(|r| r.scores.as_ref().ok()).collect();
    let col = |f: fn(&GeometricScores) -> f64| MeanStd::of(&valid.iter().map(|s| f(s)).collect::<Vec<_>>());
    BatchScoreSummary {
        dice: col(|s| s.dice),
        iou: col(|s| s.iou),
        hausdorff: col(|s| s.hausdorff),
        hd95: col(|s| s.hd95),
        valid_cases: valid.len(),
        cases: rows,
    }
}
