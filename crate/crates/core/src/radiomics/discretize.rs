//! Intensity discretization of the ROI into gray levels 1..Ng.

use serde::{Deserialize, Serialize};

use super::RadiomicsError;
use crate::volume::{Grid, MaskVolume, Volume3D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinningMode {
    FixedBinCount,
    FixedBinWidth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscretizationConfig {
    pub mode: BinningMode,
    pub bin_count: u32,
    pub bin_width: f64,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self { mode: BinningMode::FixedBinCount, bin_count: 32, bin_width: 0.25 }
    }
}

impl DiscretizationConfig {
    pub fn validate(&self) -> Result<(), RadiomicsError> {
        match self.mode {
            BinningMode::FixedBinCount if self.bin_count == 0 => Err(RadiomicsError::InvalidConfig("bin_count must be ≥ 1".into())),
            BinningMode::FixedBinWidth if !(self.bin_width > 0.0 && self.bin_width.is_finite()) => {
                Err(RadiomicsError::InvalidConfig("bin_width must be > 0".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Gray levels on the cropped grid; 0 marks voxels outside the ROI.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGrid {
    pub dims: [usize; 3],
    pub levels: Vec<u32>,
    /// Number of gray levels the matrices are sized for.
    pub ng: u32,
    /// ROI voxel count.
    pub n_voxels: usize,
}

impl Grid for LevelGrid {
    fn dims(&self) -> [usize; 3] {
        self.dims
    }
}

impl LevelGrid {
    /// Builds a grid directly from levels (0 = outside); `ng` defaults to the
    /// largest level present.
    pub fn from_levels(dims: [usize; 3], levels: Vec<u32>) -> Self {
        let ng = levels.iter().copied().max().unwrap_or(0).max(1);
        let n_voxels = levels.iter().filter(|&&l| l > 0).count();
        Self { dims, levels, ng, n_voxels }
    }

    #[inline]
    pub fn at(&self, x: isize, y: isize, z: isize) -> u32 {
        if self.in_bounds(x, y, z) {
            self.levels[self.index(x as usize, y as usize, z as usize)]
        } else {
            0
        }
    }

    /// ROI levels in raster order.
    pub fn roi_levels(&self) -> impl Iterator<Item = u32> + '_ {
        self.levels.iter().copied().filter(|&l| l > 0)
    }
}

/// Maps ROI intensities to gray levels. With a fixed bin count the edges
/// follow the ROI range, so any increasing affine intensity map yields the
/// same levels.
pub fn discretize(vol: &Volume3D, mask: &MaskVolume, cfg: &DiscretizationConfig) -> Result<LevelGrid, RadiomicsError> {
    cfg.validate()?;
    if vol.header.dims != mask.header.dims {
        return Err(RadiomicsError::DimMismatch);
    }
    let roi: Vec<f64> = vol.voxels.iter().zip(&mask.voxels).filter(|(_, &m)| m != 0).map(|(&v, _)| v).collect();
    if roi.is_empty() {
        return Err(RadiomicsError::EmptyMask);
    }
    let lo = roi.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = roi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let constant = !(range > 0.0);

    let (level_of, ng): (Box<dyn Fn(f64) -> u32>, u32) = match cfg.mode {
        _ if constant => (Box::new(|_| 1), 1),
        BinningMode::FixedBinCount => {
            let ng = cfg.bin_count;
            let k = ng as f64;
            (Box::new(move |x| (1.0 + (k * (x - lo) / range).floor()).min(k) as u32), ng)
        }
        BinningMode::FixedBinWidth => {
            let w = cfg.bin_width;
            let ng = 1 + (range / w).floor() as u32;
            (Box::new(move |x| 1 + ((x - lo) / w).floor() as u32), ng)
        }
    };
    let levels = vol.voxels.iter().zip(&mask.voxels).map(|(&v, &m)| if m != 0 { level_of(v) } else { 0 }).collect();
    Ok(LevelGrid { dims: vol.header.dims, levels, ng, n_voxels: roi.len() })
}
