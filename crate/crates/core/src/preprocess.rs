//! Volume preprocessing: z-score normalization, mask binarization,
//! cell-centred resampling, 3D connected components and tumor-centred
//! cropping with a voxel margin.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::volume::{Datatype, Grid, MaskVolume, Volume3D, VolumeHeader};

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("mask has no foreground voxels")]
    EmptyMask,
    #[error("image dims {image:?} do not match mask dims {mask:?}")]
    DimMismatch { image: [usize; 3], mask: [usize; 3] },
    #[error("target dims must be positive, got {0:?}")]
    BadTargetDims([usize; 3]),
}

/// Result of [`zscore_normalize`]; `constant_input` is raised when the
/// volume had zero variance and was mapped to all zeros.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub volume: Volume3D,
    pub constant_input: bool,
}

/// Per-volume z-score using the population standard deviation.
pub fn zscore_normalize(vol: &Volume3D) -> Normalized {
    let n = vol.voxels.len() as f64;
    let mean = vol.voxels.iter().sum::<f64>() / n;
    let var = vol.voxels.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    let mut header = vol.header.clone();
    header.datatype = Datatype::F64;
    header.intensity_scale = 1.0;
    header.intensity_offset = 0.0;
    if sd == 0.0 || !sd.is_finite() {
        return Normalized { volume: Volume3D { header, voxels: vec![0.0; vol.voxels.len()] }, constant_input: true };
    }
    let voxels = vol.voxels.iter().map(|v| (v - mean) / sd).collect();
    Normalized { volume: Volume3D { header, voxels }, constant_input: false }
}

/// Voxel is foreground iff its value is strictly above `threshold`.
pub fn binarize_mask(vol: &Volume3D, threshold: f64) -> MaskVolume {
    let mut header = vol.header.clone();
    header.datatype = Datatype::U8;
    header.intensity_scale = 1.0;
    header.intensity_offset = 0.0;
    MaskVolume { header, voxels: vol.voxels.iter().map(|&v| (v > threshold) as u8).collect() }
}

/// Cell-centred source coordinate for target index `t`, clamped to the grid.
#[inline]
fn source_coord(t: usize, src: usize, tgt: usize) -> f64 {
    let s = (t as f64 + 0.5) * (src as f64 / tgt as f64) - 0.5;
    s.clamp(0.0, (src - 1) as f64)
}

fn resampled_header(header: &VolumeHeader, target: [usize; 3]) -> VolumeHeader {
    let mut h = header.clone();
    for a in 0..3 {
        h.spacing[a] = header.spacing[a] * header.dims[a] as f64 / target[a] as f64;
    }
    h.dims = target;
    h
}

/// Per-axis linear interpolation taps: (lower index, upper index, weight of upper).
fn taps(src: usize, tgt: usize) -> Vec<(usize, usize, f64)> {
    (0..tgt)
        .map(|t| {
            let s = source_coord(t, src, tgt);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, s - lo as f64)
        })
        .collect()
}

/// Trilinear resampling with cell-centred alignment. Spacing is rescaled so
/// the physical extent is preserved.
pub fn resample_trilinear(vol: &Volume3D, target: [usize; 3]) -> Result<Volume3D, PreprocessError> {
    if target.iter().any(|&d| d == 0) {
        return Err(PreprocessError::BadTargetDims(target));
    }
    let src = vol.header.dims;
    if src == target {
        return Ok(vol.clone());
    }
    let tx = taps(src[0], target[0]);
    let ty = taps(src[1], target[1]);
    let tz = taps(src[2], target[2]);
    let mut header = resampled_header(&vol.header, target);
    header.datatype = Datatype::F64;
    let mut out = Vec::with_capacity(target.iter().product());
    for &(z0, z1, wz) in &tz {
        for &(y0, y1, wy) in &ty {
            for &(x0, x1, wx) in &tx {
                let c = |x, y, z| vol.get(x, y, z);
                let c00 = c(x0, y0, z0) * (1.0 - wx) + c(x1, y0, z0) * wx;
                let c10 = c(x0, y1, z0) * (1.0 - wx) + c(x1, y1, z0) * wx;
                let c01 = c(x0, y0, z1) * (1.0 - wx) + c(x1, y0, z1) * wx;
                let c11 = c(x0, y1, z1) * (1.0 - wx) + c(x1, y1, z1) * wx;
                let c0 = c00 * (1.0 - wy) + c10 * wy;
                let c1 = c01 * (1.0 - wy) + c11 * wy;
                out.push(c0 * (1.0 - wz) + c1 * wz);
            }
        }
    }
    Ok(Volume3D { header, voxels: out })
}

/// Nearest-neighbour mask resampling at the same cell-centred coordinates as
/// [`resample_trilinear`]; halfway coordinates round up.
pub fn resample_mask_nearest(mask: &MaskVolume, target: [usize; 3]) -> Result<MaskVolume, PreprocessError> {
    if target.iter().any(|&d| d == 0) {
        return Err(PreprocessError::BadTargetDims(target));
    }
    let src = mask.header.dims;
    if src == target {
        return Ok(mask.clone());
    }
    let nearest = |src: usize, tgt: usize| -> Vec<usize> {
        (0..tgt).map(|t| ((source_coord(t, src, tgt) + 0.5).floor() as usize).min(src - 1)).collect()
    };
    let (nx, ny, nz) = (nearest(src[0], target[0]), nearest(src[1], target[1]), nearest(src[2], target[2]));
    let header = resampled_header(&mask.header, target);
    let mut out = Vec::with_capacity(target.iter().product());
    for &z in &nz {
        for &y in &ny {
            for &x in &nx {
                out.push(mask.voxels[mask.index(x, y, z)]);
            }
        }
    }
    Ok(MaskVolume { header, voxels: out })
}

/// Voxel adjacency for component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Connectivity {
    #[serde(rename = "6")]
    Six,
    #[serde(rename = "18")]
    Eighteen,
    #[default]
    #[serde(rename = "26")]
    TwentySix,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Option<Self> {
        match n {
            6 => Some(Self::Six),
            18 => Some(Self::Eighteen),
            26 => Some(Self::TwentySix),
            _ => None,
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Self::Six => 6,
            Self::Eighteen => 18,
            Self::TwentySix => 26,
        }
    }

    /// Neighbour offsets; a voxel is adjacent when the number of nonzero
    /// offset components is at most 1, 2 or 3 respectively.
    pub fn offsets(self) -> Vec<[isize; 3]> {
        let max_nonzero = match self {
            Self::Six => 1,
            Self::Eighteen => 2,
            Self::TwentySix => 3,
        };
        let mut out = Vec::new();
        for dz in -1..=1isize {
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let nz = (dx != 0) as usize + (dy != 0) as usize + (dz != 0) as usize;
                    if nz >= 1 && nz <= max_nonzero {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Component labels (0 = background) numbered 1..=K in raster order of each
/// component's first voxel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub dims: [usize; 3],
    pub labels: Vec<u32>,
    /// `component_sizes[k - 1]` is the voxel count of label `k`.
    pub component_sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn num_components(&self) -> usize {
        self.component_sizes.len()
    }

    /// Label of the largest component; ties go to the lowest label.
    pub fn largest(&self) -> Option<u32> {
        let mut best: Option<(u32, usize)> = None;
        for (i, &size) in self.component_sizes.iter().enumerate() {
            if best.is_none_or(|(_, s)| size > s) {
                best = Some((i as u32 + 1, size));
            }
        }
        best.map(|(l, _)| l)
    }
}

/// Labels connected components of the foreground by breadth-first flood fill.
pub fn connected_components_3d(mask: &MaskVolume, connectivity: Connectivity) -> ComponentLabeling {
    let dims = mask.header.dims;
    let offsets = connectivity.offsets();
    let mut labels = vec![0u32; mask.voxels.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.voxels.len() {
        if mask.voxels[start] == 0 || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        labels[start] = label;
        queue.push_back(start);
        let mut size = 0usize;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let [x, y, z] = mask.coords(i);
            for off in &offsets {
                let (nx, ny, nz) = (x as isize + off[0], y as isize + off[1], z as isize + off[2]);
                if !mask.in_bounds(nx, ny, nz) {
                    continue;
                }
                let j = mask.index(nx as usize, ny as usize, nz as usize);
                if mask.voxels[j] != 0 && labels[j] == 0 {
                    labels[j] = label;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(size);
    }
    ComponentLabeling { dims, labels, component_sizes: sizes }
}

/// Crop provenance: `lo` inclusive, `hi` exclusive, in source voxels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRegion {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
    pub source_dims: [usize; 3],
    pub margin: usize,
}

impl CropRegion {
    pub fn dims(&self) -> [usize; 3] {
        [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1], self.hi[2] - self.lo[2]]
    }
}

#[derive(Debug, Clone)]
pub struct Cropped {
    pub image: Volume3D,
    /// Only the largest component survives in the cropped mask.
    pub mask: MaskVolume,
    pub region: CropRegion,
}

/// Crops image and mask to the bounding box of the mask's largest connected
/// component, grown by `margin` voxels per side and clamped to the grid.
pub fn crop_roi(vol: &Volume3D, mask: &MaskVolume, margin: usize, connectivity: Connectivity) -> Result<Cropped, PreprocessError> {
    if vol.header.dims != mask.header.dims {
        return Err(PreprocessError::DimMismatch { image: vol.header.dims, mask: mask.header.dims });
    }
    let labeling = connected_components_3d(mask, connectivity);
    let keep = labeling.largest().ok_or(PreprocessError::EmptyMask)?;
    let dims = mask.header.dims;

    let mut lo = dims;
    let mut hi = [0usize; 3];
    for (i, &l) in labeling.labels.iter().enumerate() {
        if l == keep {
            let c = mask.coords(i);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a] + 1);
            }
        }
    }
    for a in 0..3 {
        lo[a] = lo[a].saturating_sub(margin);
        hi[a] = (hi[a] + margin).min(dims[a]);
    }
    let region = CropRegion { lo, hi, source_dims: dims, margin };
    let out_dims = region.dims();

    let mut img_header = vol.header.clone();
    img_header.dims = out_dims;
    let mut mask_header = mask.header.clone();
    mask_header.dims = out_dims;
    let n = out_dims.iter().product();
    let mut img = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    for z in lo[2]..hi[2] {
        for y in lo[1]..hi[1] {
            for x in lo[0]..hi[0] {
                let i = vol.index(x, y, z);
                img.push(vol.voxels[i]);
                m.push((labeling.labels[i] == keep) as u8);
            }
        }
    }
    Ok(Cropped { image: Volume3D { header: img_header, voxels: img }, mask: MaskVolume { header: mask_header, voxels: m }, region })
}

/// Where in the chain the per-volume z-score is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ZscoreStage {
    /// Before cropping, over the whole resampled volume.
    Whole,
    /// After cropping, over the ROI box only.
    #[default]
    Cropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessOptions {
    pub target_dims: [usize; 3],
    pub margin: usize,
    pub connectivity: Connectivity,
    pub zscore_stage: ZscoreStage,
    pub mask_threshold: f64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            target_dims: [64, 64, 64],
            margin: 5,
            connectivity: Connectivity::TwentySix,
            zscore_stage: ZscoreStage::Cropped,
            mask_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PreprocessedPair {
    pub cropped: Cropped,
    pub constant_intensity: bool,
}

/// Image on the target grid, shared by every mask source of a case.
pub fn prepare_image(image: &Volume3D, opts: &PreprocessOptions) -> Result<(Volume3D, bool), PreprocessError> {
    let resampled = resample_trilinear(image, opts.target_dims)?;
    Ok(match opts.zscore_stage {
        ZscoreStage::Whole => {
            let n = zscore_normalize(&resampled);
            (n.volume, n.constant_input)
        }
        ZscoreStage::Cropped => (resampled, false),
    })
}

/// Mask on the target grid: binarize, then nearest-neighbour resample.
pub fn prepare_mask(mask: &Volume3D, opts: &PreprocessOptions) -> Result<MaskVolume, PreprocessError> {
    resample_mask_nearest(&binarize_mask(mask, opts.mask_threshold), opts.target_dims)
}

/// Full chain for one mask source: binarize → resample → components → crop
/// → z-score (when configured for the cropped stage). `image` must come from
/// [`prepare_image`].
pub fn preprocess_pair(
    prepared_image: &Volume3D,
    prepared_mask: &MaskVolume,
    whole_constant: bool,
    opts: &PreprocessOptions,
) -> Result<PreprocessedPair, PreprocessError> {
    let mut cropped = crop_roi(prepared_image, prepared_mask, opts.margin, opts.connectivity)?;
    let mut constant = whole_constant;
    if opts.zscore_stage == ZscoreStage::Cropped {
        let n = zscore_normalize(&cropped.image);
        cropped.image = n.volume;
        constant = n.constant_input;
    }
    Ok(PreprocessedPair { cropped, constant_intensity: constant })
}
