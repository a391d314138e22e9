//! Batch evaluation harness for candidate tumor segmentation masks.
//!
//! The crate goes beyond geometric overlap: masks are scored with Dice, IoU
//! and Hausdorff distance, radiomics features are extracted from every mask
//! source, a battery of paired statistics measures how faithfully each
//! candidate reproduces the ground-truth features, and supervised and
//! pseudo-labelling classifiers measure the downstream prognostic value.
//!
//! Modules map onto pipeline stages:
//!
//! - [`volume`]: NIfTI-1 and raw+JSON volume I/O, dataset manifests
//! - [`preprocess`]: normalization, resampling, connected components, ROI crop
//! - [`seg_metrics`]: Dice, IoU, Hausdorff and batch aggregation
//! - [`radiomics`]: feature registry and the nine feature families
//! - [`stats`]: stability battery, BH-FDR, MANOVA and Friedman tests
//! - [`dimred`]: feature selection and embedding reducers
//! - [`models`]: classifiers, cross-validation, SL/SSL pipelines, metrics
//! - [`phantom`]: synthetic cohorts and mask perturbations
//! - [`pipeline`]: configuration, stage commands and report emission

pub mod dimred;
pub mod features;
pub mod linalg;
pub mod models;
pub mod phantom;
pub mod pipeline;
pub mod preprocess;
pub mod radiomics;
pub mod seg_metrics;
pub mod stats;
pub mod volume;

pub use features::FeatureMatrix;
pub use volume::{Datatype, Endianness, MaskVolume, Volume3D, VolumeHeader};
