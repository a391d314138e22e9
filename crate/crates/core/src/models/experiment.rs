//! Supervised and pseudo-labelling experiments over stratified folds.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{stratified_kfold, CvSplit};
use super::logistic::LogisticModel;
use super::metrics::{compute_metrics, EvalMetrics, SplitMetrics};
use super::{check_training, train, ClassifierSpec, ModelError};
use crate::dimred::{fit_reducer, ReducerSpec};
use crate::features::FeatureMatrix;
use crate::radiomics::MinMaxScaling;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub tag: String,
    pub x: FeatureMatrix,
    pub y: Vec<u8>,
}

impl LabeledSet {
    pub fn new(tag: impl Into<String>, x: FeatureMatrix, y: Vec<u8>) -> Result<Self, ModelError> {
        if x.n_rows() != y.len() {
            return Err(ModelError::LengthMismatch { rows: x.n_rows(), labels: y.len() });
        }
        Ok(Self { tag: tag.into(), x, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Paradigm {
    #[serde(rename = "SL")]
    Sl,
    #[serde(rename = "SSL")]
    Ssl,
}

impl Paradigm {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sl => "SL",
            Self::Ssl => "SSL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k_folds: usize,
    pub cv_seed: u64,
    pub threshold: f64,
    /// Keep a pseudo-label only when max(p, 1 − p) ≥ τ; `None` keeps all.
    pub pseudo_label_tau: Option<f64>,
    /// Inverse regularization of the pseudo-labelling logistic regression.
    pub pseudo_label_c: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { k_folds: 5, cv_seed: 0, threshold: 0.5, pseudo_label_tau: None, pseudo_label_c: 1.0 }
    }
}

/// Disjointness facts recorded while running one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldLeakage {
    pub n_train: usize,
    pub n_held_out: usize,
    pub n_pool: usize,
    pub n_pseudo_labeled: usize,
    pub n_pseudo_positive: usize,
    pub held_out_in_training: usize,
    pub held_out_in_pool: usize,
    pub external_in_training_or_pool: usize,
}

impl FoldLeakage {
    pub fn is_clean(&self) -> bool {
        self.held_out_in_training == 0 && self.held_out_in_pool == 0 && self.external_in_training_or_pool == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalMetrics<M> {
    pub tag: String,
    pub metrics: M,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub reduced_features: Vec<String>,
    pub validation: SplitMetrics,
    pub externals: Vec<ExternalMetrics<SplitMetrics>>,
    pub leakage: FoldLeakage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub paradigm: Paradigm,
    pub reducer: ReducerSpec,
    pub classifier: ClassifierSpec,
    pub split: CvSplit,
    pub folds: Vec<FoldResult>,
    pub validation: EvalMetrics,
    pub externals: Vec<ExternalMetrics<EvalMetrics>>,
}

impl ExperimentResult {
    pub fn leakage_clean(&self) -> bool {
        self.folds.iter().all(|f| f.leakage.is_clean())
    }
}

fn ids(m: &FeatureMatrix) -> HashSet<&str> {
    m.case_ids.iter().map(String::as_str).collect()
}

fn check_disjoint(labeled: &LabeledSet, pool: Option<&FeatureMatrix>, externals: &[LabeledSet]) -> Result<(), ModelError> {
    let lab = ids(&labeled.x);
    for e in externals {
        if let Some(c) = e.x.case_ids.iter().find(|c| lab.contains(c.as_str())) {
            return Err(ModelError::ExternalOverlapsLabeled(c.clone()));
        }
    }
    if let Some(pool) = pool {
        if pool.n_rows() == 0 {
            return Err(ModelError::EmptyPool);
        }
        if let Some(c) = pool.case_ids.iter().find(|c| lab.contains(c.as_str())) {
            return Err(ModelError::PoolOverlapsLabeled(c.clone()));
        }
        for e in externals {
            let ext = ids(&e.x);
            if let Some(c) = pool.case_ids.iter().find(|c| ext.contains(c.as_str())) {
                return Err(ModelError::PoolOverlapsExternal(c.clone()));
            }
        }
        if pool.feature_ids != labeled.x.feature_ids {
            return Err(ModelError::InvalidSpec("pool feature ids differ from labeled set".into()));
        }
    }
    for e in externals {
        if e.x.feature_ids != labeled.x.feature_ids {
            return Err(ModelError::InvalidSpec(format!("external set `{}` feature ids differ from labeled set", e.tag)));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    cfg: &ExperimentConfig,
    reducer: &ReducerSpec,
    classifier: &ClassifierSpec,
    labeled: &LabeledSet,
    split: &CvSplit,
    fold: usize,
    pool: Option<&FeatureMatrix>,
    externals: &[LabeledSet],
) -> Result<FoldResult, ModelError> {
    let (train_idx, held_idx) = split.fold_indices(fold);
    let x_train_raw = labeled.x.select_rows(&train_idx);
    let mut y_train: Vec<u8> = train_idx.iter().map(|&i| labeled.y[i]).collect();
    let x_held_raw = labeled.x.select_rows(&held_idx);
    let y_held: Vec<u8> = held_idx.iter().map(|&i| labeled.y[i]).collect();
    check_training(&x_train_raw, &y_train)?;

    // Every transform is fitted on this fold's labeled training rows only.
    let scaler = MinMaxScaling::fit(&x_train_raw);
    let fitted = fit_reducer(reducer, &scaler.apply(&x_train_raw), Some(&y_train))?;
    let prepare = |m: &FeatureMatrix| fitted.apply(&scaler.apply(m));
    let mut x_train = prepare(&x_train_raw)?;

    let mut n_pseudo = 0;
    let mut n_pseudo_pos = 0;
    let mut used_pool_ids: Vec<String> = Vec::new();
    if let Some(pool) = pool {
        let x_pool = prepare(pool)?;
        let labeler = LogisticModel::fit(&x_train, &y_train, cfg.pseudo_label_c);
        let probs = labeler.predict_proba(&x_pool);
        let accepted: Vec<usize> =
            (0..probs.len()).filter(|&i| cfg.pseudo_label_tau.is_none_or(|tau| probs[i].max(1.0 - probs[i]) >= tau)).collect();
        if !accepted.is_empty() {
            let pseudo: Vec<u8> = accepted.iter().map(|&i| u8::from(probs[i] > cfg.threshold)).collect();
            n_pseudo = accepted.len();
            n_pseudo_pos = pseudo.iter().filter(|&&v| v == 1).count();
            used_pool_ids = accepted.iter().map(|&i| pool.case_ids[i].clone()).collect();
            x_train = x_train.vstack(&x_pool.select_rows(&accepted));
            y_train.extend(pseudo);
        }
    }

    let model = train(classifier, &x_train, &y_train)?;
    let evaluate = |x: &FeatureMatrix, y: &[u8]| -> Result<SplitMetrics, ModelError> {
        compute_metrics(y, &model.predict_proba(&prepare(x)?), cfg.threshold)
    };
    let validation = evaluate(&x_held_raw, &y_held)?;
    let ext = externals
        .iter()
        .map(|e| Ok(ExternalMetrics { tag: e.tag.clone(), metrics: evaluate(&e.x, &e.y)? }))
        .collect::<Result<Vec<_>, ModelError>>()?;

    let training_ids: HashSet<&str> = x_train.case_ids.iter().map(String::as_str).collect();
    let pool_ids: HashSet<&str> = pool.map(ids).unwrap_or_default();
    let held_ids = ids(&x_held_raw);
    let leakage = FoldLeakage {
        n_train: train_idx.len(),
        n_held_out: held_idx.len(),
        n_pool: pool.map_or(0, FeatureMatrix::n_rows),
        n_pseudo_labeled: n_pseudo,
        n_pseudo_positive: n_pseudo_pos,
        held_out_in_training: held_ids.iter().filter(|c| training_ids.contains(*c)).count(),
        held_out_in_pool: held_ids.iter().filter(|c| pool_ids.contains(*c)).count(),
        external_in_training_or_pool: externals
            .iter()
            .flat_map(|e| e.x.case_ids.iter())
            .filter(|c| training_ids.contains(c.as_str()) || pool_ids.contains(c.as_str()))
            .count(),
    };
    debug_assert!(used_pool_ids.iter().all(|c| !held_ids.contains(c.as_str())));
    Ok(FoldResult { fold, reduced_features: fitted.output_ids().to_vec(), validation, externals: ext, leakage })
}

fn run(
    paradigm: Paradigm,
    cfg: &ExperimentConfig,
    reducer: &ReducerSpec,
    classifier: &ClassifierSpec,
    labeled: &LabeledSet,
    pool: Option<&FeatureMatrix>,
    externals: &[LabeledSet],
) -> Result<ExperimentResult, ModelError> {
    classifier.validate()?;
    check_disjoint(labeled, pool, externals)?;
    let split = stratified_kfold(&labeled.y, cfg.k_folds, cfg.cv_seed)?;
    let folds = (0..cfg.k_folds)
        .into_par_iter()
        .map(|f| run_fold(cfg, reducer, classifier, labeled, &split, f, pool, externals))
        .collect::<Result<Vec<_>, _>>()?;
    let validation = EvalMetrics::from_splits(&folds.iter().map(|f| f.validation.clone()).collect::<Vec<_>>());
    let ext_summary = externals
        .iter()
        .enumerate()
        .map(|(k, e)| ExternalMetrics {
            tag: e.tag.clone(),
            metrics: EvalMetrics::from_splits(&folds.iter().map(|f| f.externals[k].metrics.clone()).collect::<Vec<_>>()),
        })
        .collect();
    Ok(ExperimentResult {
        paradigm,
        reducer: reducer.clone(),
        classifier: classifier.clone(),
        split,
        folds,
        validation,
        externals: ext_summary,
    })
}

/// Supervised learning: per fold, scale and reduce on the training folds,
/// train, then score the held-out fold and every external set.
pub fn run_sl(
    cfg: &ExperimentConfig,
    reducer: &ReducerSpec,
    classifier: &ClassifierSpec,
    labeled: &LabeledSet,
    externals: &[LabeledSet],
) -> Result<ExperimentResult, ModelError> {
    run(Paradigm::Sl, cfg, reducer, classifier, labeled, None, externals)
}

/// Pseudo-labelling: as [`run_sl`], but a logistic regression fitted on the
/// training folds labels the unlabeled pool and the final classifier is
/// retrained on training folds plus accepted pseudo-labels.
pub fn run_ssl(
    cfg: &ExperimentConfig,
    reducer: &ReducerSpec,
    classifier: &ClassifierSpec,
    labeled: &LabeledSet,
    pool: &FeatureMatrix,
    externals: &[LabeledSet],
) -> Result<ExperimentResult, ModelError> {
    run(Paradigm::Ssl, cfg, reducer, classifier, labeled, Some(pool), externals)
}
