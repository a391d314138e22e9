//! Radiomics feature extraction over a cropped image/mask pair.
//!
//! Nine families sit behind a fixed registry so every case yields the same
//! ordered feature ids. Texture families work on the discretized ROI
//! ([`discretize`]); shape uses the mask alone; first-order statistics and
//! moment invariants use raw intensities.

pub mod discretize;
pub mod firstorder;
pub mod glcm;
pub mod glrlm;
pub mod matrix;
pub mod moments;
pub mod ngldm;
pub mod ngtdm;
pub mod shape;
pub mod zones;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use discretize::{discretize, BinningMode, DiscretizationConfig, LevelGrid};
pub use matrix::GrayLevelMatrix;

use crate::features::FeatureMatrix;
use crate::volume::{MaskVolume, Volume3D};

/// Bumped whenever ids, order or definitions change.
pub const REGISTRY_VERSION: &str = "1.0.0";

#[derive(Debug, Error)]
pub enum RadiomicsError {
    #[error("ROI mask is empty")]
    EmptyMask,
    #[error("image and mask dimensions differ")]
    DimMismatch,
    #[error("invalid discretization: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Firstorder,
    Shape,
    Glcm,
    Glrlm,
    Glszm,
    Gldzm,
    Ngtdm,
    Ngldm,
    Moments,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Firstorder,
        Family::Shape,
        Family::Glcm,
        Family::Glrlm,
        Family::Glszm,
        Family::Gldzm,
        Family::Ngtdm,
        Family::Ngldm,
        Family::Moments,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Firstorder => "firstorder",
            Family::Shape => "shape",
            Family::Glcm => "glcm",
            Family::Glrlm => "glrlm",
            Family::Glszm => "glszm",
            Family::Gldzm => "gldzm",
            Family::Ngtdm => "ngtdm",
            Family::Ngldm => "ngldm",
            Family::Moments => "moments",
        }
    }
}

/// One representative of each ± pair of 3D unit offsets.
pub const DIRECTIONS: [[isize; 3]; 13] = [
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [-1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [-1, 0, 1],
    [0, 1, 1],
    [0, -1, 1],
    [1, 1, 1],
    [-1, 1, 1],
    [1, -1, 1],
    [-1, -1, 1],
];

pub(crate) const NEIGHBOURS_26: [[isize; 3]; 26] = {
    let mut out = [[0isize; 3]; 26];
    let mut k = 0;
    let mut i = 0;
    while i < 27 {
        let d = [(i % 3) as isize - 1, ((i / 3) % 3) as isize - 1, (i / 9) as isize - 1];
        if !(d[0] == 0 && d[1] == 0 && d[2] == 0) {
            out[k] = d;
            k += 1;
        }
        i += 1;
    }
    out
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureDef {
    pub feature_id: String,
    pub family: Family,
    pub definition_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRegistry {
    pub version: &'static str,
    pub features: Vec<FeatureDef>,
}

impl FeatureRegistry {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.features.iter().map(|f| f.feature_id.clone()).collect()
    }

    pub fn family_counts(&self) -> BTreeMap<Family, usize> {
        let mut out = BTreeMap::new();
        for f in &self.features {
            *out.entry(f.family).or_insert(0) += 1;
        }
        out
    }
}

fn push(out: &mut Vec<FeatureDef>, family: Family, prefix: &str, names: &[&str], definition: &str) {
    for n in names {
        out.push(FeatureDef { feature_id: format!("{prefix}_{n}"), family, definition_ref: definition.to_string() });
    }
}

/// The active registry, in extraction order.
pub fn registry() -> FeatureRegistry {
    use Family::*;
    let mut f = Vec::new();
    push(&mut f, Firstorder, "firstorder", &firstorder::STATISTIC_FEATURES, "statistic of raw ROI intensities");
    push(&mut f, Firstorder, "firstorder", &firstorder::HISTOGRAM_FEATURES, "statistic of the discretized gray-level histogram");
    push(&mut f, Firstorder, "firstorder", &firstorder::IVH_FEATURES, "intensity-volume histogram on the gray-level fraction");
    push(&mut f, Shape, "shape", &shape::FEATURES, "mask morphology, face-counted surface, voxel-centre diameters");
    push(&mut f, Glcm, "glcm_avg", &glcm::FEATURES, "symmetric co-occurrence at distance 1, averaged over 13 directions");
    push(&mut f, Glcm, "glcm_merged", &glcm::FEATURES, "symmetric co-occurrence at distance 1, 13 directions merged");
    push(&mut f, Glrlm, "glrlm_avg", &glrlm::FEATURES, "run lengths, averaged over 13 directions");
    push(&mut f, Glrlm, "glrlm_merged", &glrlm::FEATURES, "run lengths, 13 directions merged");
    push(&mut f, Glszm, "glszm", &zones::GLSZM_FEATURES, "26-connected equal-level zones by size");
    push(&mut f, Gldzm, "gldzm", &zones::GLDZM_FEATURES, "zones by Chebyshev distance to the ROI border");
    push(&mut f, Ngtdm, "ngtdm", &ngtdm::FEATURES, "gray-tone difference to the in-ROI 26-neighbourhood mean");
    push(&mut f, Ngldm, "ngldm", &ngldm::FEATURES, "equal-level dependence counts, radius 1, alpha 0");
    push(&mut f, Moments, "moments", &moments::FEATURES, "intensity-weighted central moment invariants");
    FeatureRegistry { version: REGISTRY_VERSION, features: f }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RadiomicsConfig {
    pub discretization: DiscretizationConfig,
}

/// One case's features in registry order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureVector {
    pub case_id: String,
    pub values: Vec<f64>,
    /// True when any undefined value was replaced by its defined limit.
    pub nan_policy_applied: bool,
    /// Ids of the replaced values.
    pub degenerate: Vec<String>,
}

impl FeatureVector {
    pub fn get(&self, feature_id: &str) -> Option<f64> {
        registry().features.iter().position(|f| f.feature_id == feature_id).map(|i| self.values[i])
    }
}

/// Per-family raw values in registry order; undefined entries are NaN.
pub fn extract_raw(vol: &Volume3D, mask: &MaskVolume, cfg: &RadiomicsConfig) -> Result<Vec<f64>, RadiomicsError> {
    if vol.header.dims != mask.header.dims {
        return Err(RadiomicsError::DimMismatch);
    }
    let levels = discretize(vol, mask, &cfg.discretization)?;
    let spacing = vol.header.spacing;
    let roi: Vec<f64> = vol.voxels.iter().zip(&mask.voxels).filter(|(_, &m)| m != 0).map(|(&v, _)| v).collect();

    let mut out = firstorder::intensity_statistics(&roi, spacing.iter().product());
    out.extend(firstorder::histogram_features(&levels));
    out.extend(firstorder::ivh_features(&levels));
    out.extend(shape::shape_features(mask, spacing));
    out.extend(glcm::glcm_features(&levels));
    out.extend(glrlm::glrlm_features(&levels));
    let (size_zone, distance_zone) = zones::zone_features(&levels);
    out.extend(size_zone);
    out.extend(distance_zone);
    out.extend(ngtdm::ngtdm_features(&levels));
    out.extend(ngldm::ngldm_features(&levels));
    out.extend(moments::moment_invariants(vol, mask)?);
    Ok(out)
}

/// Full feature vector. Undefined values (zero denominators) become 0 and
/// are listed in `degenerate`.
pub fn extract_all(case_id: &str, vol: &Volume3D, mask: &MaskVolume, cfg: &RadiomicsConfig) -> Result<FeatureVector, RadiomicsError> {
    let mut values = extract_raw(vol, mask, cfg)?;
    let reg = registry();
    debug_assert_eq!(values.len(), reg.len());
    let mut degenerate = Vec::new();
    for (v, def) in values.iter_mut().zip(&reg.features) {
        if !v.is_finite() {
            *v = 0.0;
            degenerate.push(def.feature_id.clone());
        }
    }
    Ok(FeatureVector { case_id: case_id.to_string(), values, nan_policy_applied: !degenerate.is_empty(), degenerate })
}

/// Per-feature min-max scaling fitted on a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaling {
    pub feature_ids: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaling {
    pub fn fit(train: &FeatureMatrix) -> Self {
        let p = train.n_cols();
        let mut min = vec![f64::INFINITY; p];
        let mut max = vec![f64::NEG_INFINITY; p];
        for row in train.rows() {
            for j in 0..p {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        Self { feature_ids: train.feature_ids.clone(), min, max }
    }

    /// `(x − min)/(max − min)` without clipping; constant training columns
    /// map to 0.
    pub fn apply(&self, m: &FeatureMatrix) -> FeatureMatrix {
        let mut out = m.clone();
        for i in 0..m.n_rows() {
            for j in 0..m.n_cols() {
                let range = self.max[j] - self.min[j];
                out.set(i, j, if range > 0.0 { (m.get(i, j) - self.min[j]) / range } else { 0.0 });
            }
        }
        out
    }
}

pub fn minmax_normalize(train: &FeatureMatrix, apply_to: &FeatureMatrix) -> (FeatureMatrix, MinMaxScaling) {
    let s = MinMaxScaling::fit(train);
    (s.apply(apply_to), s)
}
