use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{io_context, PipelineError};
use crate::dimred::{ReducerMethod, ReducerSpec};
use crate::models::{ClassifierMethod, ClassifierSpec, ExperimentConfig, Paradigm};
use crate::preprocess::PreprocessOptions;
use crate::radiomics::RadiomicsConfig;

/// One file drives every stage. Relative paths resolve against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    pub preprocess: PreprocessOptions,
    pub radiomics: RadiomicsConfig,
    /// Hausdorff in physical units from the target-grid spacing.
    pub physical_hausdorff: bool,
    pub reducers: Vec<ReducerSpec>,
    pub classifiers: Vec<ClassifierSpec>,
    pub paradigms: Vec<Paradigm>,
    pub experiment: ExperimentConfig,
    /// Tags of the cross-validated labeled cohort; empty means every labeled
    /// case not listed as external or unlabeled.
    pub labeled_tags: Vec<String>,
    pub external_tags: Vec<String>,
    pub unlabeled_tags: Vec<String>,
    /// Mask sources to model (`gt` or a model name); empty means all.
    pub predict_sources: Vec<String>,
    /// Models with fewer usable cases are skipped by the stability stage.
    pub min_cases_per_model: usize,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            manifest: PathBuf::from("manifest.json"),
            output_dir: PathBuf::from("out"),
            preprocess: PreprocessOptions::default(),
            radiomics: RadiomicsConfig::default(),
            physical_hausdorff: false,
            reducers: vec![ReducerSpec::new(ReducerMethod::MutualInfo, 10), ReducerSpec::new(ReducerMethod::Lasso, 10)],
            classifiers: vec![
                ClassifierSpec::new(ClassifierMethod::LogisticRegression, 0),
                ClassifierSpec::new(ClassifierMethod::RandomForest, 0),
            ],
            paradigms: vec![Paradigm::Sl, Paradigm::Ssl],
            experiment: ExperimentConfig::default(),
            labeled_tags: Vec::new(),
            external_tags: Vec::new(),
            unlabeled_tags: Vec::new(),
            predict_sources: Vec::new(),
            min_cases_per_model: 3,
            base_dir: PathBuf::new(),
        }
    }
}

impl PipelineConfig {
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.resolve(&self.manifest)
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        for r in &self.reducers {
            if r.method.is_stochastic() && r.seed.is_none() {
                return bad(format!("reducer {} needs a seed", r.method.as_str()));
            }
        }
        for c in &self.classifiers {
            c.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        if self.experiment.k_folds < 2 {
            return bad("experiment.k_folds must be ≥ 2".into());
        }
        for t in &self.unlabeled_tags {
            if self.external_tags.contains(t) || self.labeled_tags.contains(t) {
                return bad(format!("tag `{t}` is both unlabeled and labeled/external"));
            }
        }
        for t in &self.external_tags {
            if self.labeled_tags.contains(t) {
                return bad(format!("tag `{t}` is both labeled and external"));
            }
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<PipelineConfig, PipelineError> {
    let text = std::fs::read(path).map_err(io_context(format!("reading {}", path.display())))?;
    let mut cfg: PipelineConfig = serde_json::from_slice(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    cfg.validate()?;
    Ok(cfg)
}

/// SHA-256 over the canonical JSON of the configuration. The output
/// directory is left out: where results go does not change them.
pub fn config_hash(cfg: &PipelineConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = PathBuf::new();
    let bytes = serde_json::to_vec(&c).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}
