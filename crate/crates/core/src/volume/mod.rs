//! Volume containers and on-disk formats.
//!
//! Voxels are stored densely in x-fastest order: the linear index of
//! `(x, y, z)` is `x + nx * (y + ny * z)`.

mod manifest;
mod nifti;
mod raw;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use manifest::{load_manifest, load_manifest_with, CaseManifest, ManifestIssue, MissingFilePolicy};
pub use nifti::{parse_nifti1, parse_nifti1_pair, read_nifti, NIFTI1_HEADER_SIZE};
pub use raw::{read_raw, write_raw, write_raw_mask, RawKind, RawVolume};

#[derive(Debug, Error)]
pub enum VolumeError {
    #[error("header too short: {0} bytes, need 348")]
    HeaderTooShort(usize),
    #[error("sizeof_hdr is not 348 in either byte order")]
    BadHeaderSize,
    #[error("bad magic {0:?}, expected \"n+1\\0\" or \"ni1\\0\"")]
    BadMagic([u8; 4]),
    #[error("unsupported datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("unsupported dimensionality: dim = {0:?}")]
    UnsupportedDims([i16; 8]),
    #[error("payload has {actual} bytes, dims imply {expected}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("payload contains a non-finite value at voxel {0}")]
    NonFinitePayload(usize),
    #[error("sidecar is missing key `{0}`")]
    SidecarMissingKey(&'static str),
    #[error("invalid sidecar: {0}")]
    InvalidSidecar(String),
    #[error("payload has {actual} bytes, sidecar implies {expected}")]
    PayloadSizeMismatch { expected: usize, actual: usize },
    #[error("mask value {value} at voxel {index} is outside [0, 1]")]
    MaskNotBinary { index: usize, value: f64 },
    #[error("duplicate case id `{0}`")]
    DuplicateCaseId(String),
    #[error("case `{case_id}` references missing file {path}")]
    MissingFile { case_id: String, path: PathBuf },
    #[error("case `{0}` is labeled but has no survival_years")]
    LabeledWithoutSurvival(String),
    #[error("case `{0}` has negative survival_years")]
    NegativeSurvival(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("unsupported volume file {0}")]
    UnsupportedFormat(PathBuf),
    #[error("invalid volume: {0}")]
    Invalid(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> VolumeError + '_ {
    move |source| VolumeError::Io { path: path.to_path_buf(), source }
}

/// Stored voxel type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    U8,
    I16,
    I32,
    F32,
    F64,
}

impl Datatype {
    pub fn from_nifti_code(code: i16) -> Option<Self> {
        match code {
            2 => Some(Self::U8),
            4 => Some(Self::I16),
            8 => Some(Self::I32),
            16 => Some(Self::F32),
            64 => Some(Self::F64),
            _ => None,
        }
    }

    pub fn nifti_code(self) -> i16 {
        match self {
            Self::U8 => 2,
            Self::I16 => 4,
            Self::I32 => 8,
            Self::F32 => 16,
            Self::F64 => 64,
        }
    }

    pub fn size_bytes(self) -> usize {
        match self {
            Self::U8 => 1,
            Self::I16 => 2,
            Self::I32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, Self::U8 | Self::I16 | Self::I32)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::U8 => "u8",
            Self::I16 => "i16",
            Self::I32 => "i32",
            Self::F32 => "f32",
            Self::F64 => "f64",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "u8" => Some(Self::U8),
            "i16" => Some(Self::I16),
            "i32" => Some(Self::I32),
            "f32" => Some(Self::F32),
            "f64" => Some(Self::F64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endianness {
    Little,
    Big,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    /// Millimetres per voxel along each axis.
    pub spacing: [f64; 3],
    pub datatype: Datatype,
    pub intensity_scale: f64,
    pub intensity_offset: f64,
    pub endianness: Endianness,
}

impl VolumeHeader {
    /// A little-endian f64 header with unit spacing and identity scaling.
    pub fn new(dims: [usize; 3]) -> Self {
        Self {
            dims,
            spacing: [1.0; 3],
            datatype: Datatype::F64,
            intensity_scale: 1.0,
            intensity_offset: 0.0,
            endianness: Endianness::Little,
        }
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn validate(&self) -> Result<(), VolumeError> {
        if self.dims.iter().any(|&d| d == 0) {
            return Err(VolumeError::Invalid(format!("dims must be positive, got {:?}", self.dims)));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(VolumeError::Invalid(format!("spacing must be positive, got {:?}", self.spacing)));
        }
        if self.intensity_scale == 0.0 || !self.intensity_scale.is_finite() {
            return Err(VolumeError::Invalid("intensity_scale must be finite and nonzero".into()));
        }
        Ok(())
    }
}

/// Index helpers shared by the image and mask grids.
pub trait Grid {
    fn dims(&self) -> [usize; 3];

    #[inline]
    fn index(&self, x: usize, y: usize, z: usize) -> usize {
        let [nx, ny, _] = self.dims();
        x + nx * (y + ny * z)
    }

    #[inline]
    fn coords(&self, i: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims();
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    }

    fn len(&self) -> usize {
        self.dims().iter().product()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn in_bounds(&self, x: isize, y: isize, z: isize) -> bool {
        let [nx, ny, nz] = self.dims();
        x >= 0 && y >= 0 && z >= 0 && (x as usize) < nx && (y as usize) < ny && (z as usize) < nz
    }
}

/// Dense scalar volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    pub header: VolumeHeader,
    pub voxels: Vec<f64>,
}

impl Grid for Volume3D {
    fn dims(&self) -> [usize; 3] {
        self.header.dims
    }
}

impl Volume3D {
    pub fn new(header: VolumeHeader, voxels: Vec<f64>) -> Result<Self, VolumeError> {
        header.validate()?;
        if voxels.len() != header.voxel_count() {
            return Err(VolumeError::DimMismatch { expected: header.voxel_count(), actual: voxels.len() });
        }
        if let Some(i) = voxels.iter().position(|v| !v.is_finite()) {
            return Err(VolumeError::NonFinitePayload(i));
        }
        Ok(Self { header, voxels })
    }

    pub fn filled(dims: [usize; 3], value: f64) -> Self {
        let header = VolumeHeader::new(dims);
        let n = header.voxel_count();
        Self { header, voxels: vec![value; n] }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let header = VolumeHeader::new(dims);
        let mut voxels = Vec::with_capacity(header.voxel_count());
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    voxels.push(f(x, y, z));
                }
            }
        }
        Self { header, voxels }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.voxels[self.index(x, y, z)]
    }
}

/// Binary volume; every voxel is 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskVolume {
    pub header: VolumeHeader,
    pub voxels: Vec<u8>,
}

impl Grid for MaskVolume {
    fn dims(&self) -> [usize; 3] {
        self.header.dims
    }
}

impl MaskVolume {
    pub fn new(header: VolumeHeader, voxels: Vec<u8>) -> Result<Self, VolumeError> {
        header.validate()?;
        if voxels.len() != header.voxel_count() {
            return Err(VolumeError::DimMismatch { expected: header.voxel_count(), actual: voxels.len() });
        }
        if let Some(i) = voxels.iter().position(|&v| v > 1) {
            return Err(VolumeError::MaskNotBinary { index: i, value: voxels[i] as f64 });
        }
        Ok(Self { header, voxels })
    }

    pub fn empty(dims: [usize; 3]) -> Self {
        let mut header = VolumeHeader::new(dims);
        header.datatype = Datatype::U8;
        let n = header.voxel_count();
        Self { header, voxels: vec![0; n] }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut mask = Self::empty(dims);
        let mut i = 0;
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    mask.voxels[i] = f(x, y, z) as u8;
                    i += 1;
                }
            }
        }
        mask
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.voxels[self.index(x, y, z)] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, on: bool) {
        let i = self.index(x, y, z);
        self.voxels[i] = on as u8;
    }

    pub fn count(&self) -> usize {
        self.voxels.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_blank(&self) -> bool {
        self.voxels.iter().all(|&v| v == 0)
    }
}

/// Either kind of volume, as loaded from a file of unknown role.
#[derive(Debug, Clone)]
pub enum AnyVolume {
    Image(Volume3D),
    Mask(MaskVolume),
}

impl AnyVolume {
    /// Intensity view; masks become 0.0 / 1.0 images.
    pub fn into_image(self) -> Volume3D {
        match self {
            Self::Image(v) => v,
            Self::Mask(m) => {
                let mut header = m.header;
                header.datatype = Datatype::F64;
                Volume3D { header, voxels: m.voxels.iter().map(|&v| v as f64).collect() }
            }
        }
    }
}

/// Loads a volume by extension: `.nii`, `.nii.gz`, `.hdr` (with `.img`), or
/// the internal `.vol` / `.json` pair.
pub fn load_volume(path: &Path) -> Result<AnyVolume, VolumeError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_ascii_lowercase();
    if name.ends_with(".nii") || name.ends_with(".nii.gz") || name.ends_with(".hdr") {
        return read_nifti(path).map(AnyVolume::Image);
    }
    if name.ends_with(".vol") || name.ends_with(".json") {
        let vol = path.with_extension("vol");
        let sidecar = path.with_extension("json");
        return Ok(match read_raw(&vol, &sidecar)? {
            RawVolume::Image(v) => AnyVolume::Image(v),
            RawVolume::Mask(m) => AnyVolume::Mask(m),
        });
    }
    Err(VolumeError::UnsupportedFormat(path.to_path_buf()))
}
