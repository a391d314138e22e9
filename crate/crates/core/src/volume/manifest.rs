//! Dataset manifests: a JSON array of case records.
//!
//! ```json
//! [{
//!   "case_id": "case_001",
//!   "image_path": "images/case_001.nii.gz",
//!   "gt_mask_path": "masks/case_001_gt.nii.gz",
//!   "model_masks": {"vnet": "masks/case_001_vnet.nii.gz"},
//!   "survival_years": 5.2,
//!   "dataset_tag": "train",
//!   "labeled": true
//! }]
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_err, VolumeError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseManifest {
    pub case_id: String,
    pub image_path: PathBuf,
    pub gt_mask_path: PathBuf,
    #[serde(default)]
    pub model_masks: BTreeMap<String, PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survival_years: Option<f64>,
    pub dataset_tag: String,
    #[serde(default)]
    pub labeled: bool,
}

impl CaseManifest {
    /// Every path the case references, GT and image first.
    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        [self.image_path.as_path(), self.gt_mask_path.as_path()].into_iter().chain(self.model_masks.values().map(PathBuf::as_path))
    }
}

/// What to do when a referenced file does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingFilePolicy {
    /// Reject the whole manifest.
    Error,
    /// Keep the record and report it; batch stages isolate the failure.
    Report,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestIssue {
    pub case_id: String,
    pub path: PathBuf,
}

/// Loads and validates a manifest; any missing file is an error.
pub fn load_manifest(path: &Path) -> Result<Vec<CaseManifest>, VolumeError> {
    load_manifest_with(path, MissingFilePolicy::Error).map(|(cases, _)| cases)
}

pub fn load_manifest_with(path: &Path, policy: MissingFilePolicy) -> Result<(Vec<CaseManifest>, Vec<ManifestIssue>), VolumeError> {
    let text = std::fs::read(path).map_err(io_err(path))?;
    let mut cases: Vec<CaseManifest> =
        serde_json::from_slice(&text).map_err(|source| VolumeError::Json { path: path.to_path_buf(), source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();

    let mut seen = BTreeSet::new();
    let mut issues = Vec::new();
    for case in &mut cases {
        if case.case_id.is_empty() {
            return Err(VolumeError::InvalidManifest("empty case_id".into()));
        }
        if !seen.insert(case.case_id.clone()) {
            return Err(VolumeError::DuplicateCaseId(case.case_id.clone()));
        }
        match case.survival_years {
            Some(s) if !(s >= 0.0 && s.is_finite()) => return Err(VolumeError::NegativeSurvival(case.case_id.clone())),
            None if case.labeled => return Err(VolumeError::LabeledWithoutSurvival(case.case_id.clone())),
            _ => {}
        }

        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut case.image_path);
        resolve(&mut case.gt_mask_path);
        case.model_masks.values_mut().for_each(resolve);

        for p in case.paths() {
            if !p.exists() {
                match policy {
                    MissingFilePolicy::Error => {
                        return Err(VolumeError::MissingFile { case_id: case.case_id.clone(), path: p.to_path_buf() })
                    }
                    MissingFilePolicy::Report => issues.push(ManifestIssue { case_id: case.case_id.clone(), path: p.to_path_buf() }),
                }
            }
        }
    }
    Ok((cases, issues))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn setup(records: serde_json::Value) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        for f in ["a.vol", "b.vol", "c.vol", "d.vol"] {
            std::fs::write(dir.path().join(f), b"").unwrap();
        }
        let path = dir.path().join("manifest.json");
        std::fs::write(&path, records.to_string()).unwrap();
        (dir, path)
    }

    fn record(id: &str, labeled: bool, survival: Option<f64>) -> serde_json::Value {
        let mut r = json!({
            "case_id": id, "image_path": "a.vol", "gt_mask_path": "b.vol",
            "model_masks": {"m1": "c.vol"}, "dataset_tag": "train", "labeled": labeled
        });
        if let Some(s) = survival {
            r["survival_years"] = json!(s);
        }
        r
    }

    #[test]
    fn two_cases_resolved() {
        let (dir, path) = setup(json!([record("case_001", true, Some(5.0)), record("case_002", false, None)]));
        let cases = load_manifest(&path).unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].image_path, dir.path().join("a.vol"));
        assert_eq!(cases[1].model_masks["m1"], dir.path().join("c.vol"));
    }

    #[test]
    fn duplicate_ids() {
        let (_dir, path) = setup(json!([record("case_001", false, None), record("case_001", false, None)]));
        assert!(matches!(load_manifest(&path), Err(VolumeError::DuplicateCaseId(id)) if id == "case_001"));
    }

    #[test]
    fn labeled_without_survival() {
        let (_dir, path) = setup(json!([record("case_001", true, None)]));
        assert!(matches!(load_manifest(&path), Err(VolumeError::LabeledWithoutSurvival(_))));
    }

    #[test]
    fn missing_file_policies() {
        let mut r = record("case_001", false, None);
        r["gt_mask_path"] = json!("nope.vol");
        let (_dir, path) = setup(json!([r, record("case_002", false, None)]));
        assert!(matches!(load_manifest(&path), Err(VolumeError::MissingFile { .. })));
        let (cases, issues) = load_manifest_with(&path, MissingFilePolicy::Report).unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].case_id, "case_001");
    }
}
