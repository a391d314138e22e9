//! Classifier registry, cross-validation, metrics and the SL/SSL experiments.

pub mod cv;
pub mod experiment;
pub mod forest;
pub mod knn;
pub mod logistic;
pub mod metrics;
pub mod mlp;
pub mod nb;
pub mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dimred::DimredError;
use crate::features::FeatureMatrix;

pub use cv::{stratified_kfold, CvSplit};
pub use experiment::{run_sl, run_ssl, ExperimentConfig, ExperimentResult, LabeledSet, Paradigm};
pub use metrics::{compute_metrics, roc_auc, EvalMetrics, MetricFlag, SplitMetrics, METRIC_NAMES};

/// Survival above this many years is the favourable class.
pub const SURVIVAL_THRESHOLD_YEARS: f64 = 4.0;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("training labels contain a single class")]
    SingleClassTraining,
    #[error("non-finite feature value")]
    NonFiniteInput,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("labels must be 0 or 1")]
    NonBinaryLabel,
    #[error("class {class} has {got} cases, need at least {needed}")]
    TooFewPerClass { class: u8, got: usize, needed: usize },
    #[error("negative survival {0}")]
    NegativeSurvival(f64),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("unlabeled pool contains labeled case `{0}`")]
    PoolOverlapsLabeled(String),
    #[error("unlabeled pool contains external case `{0}`")]
    PoolOverlapsExternal(String),
    #[error("external set contains labeled case `{0}`")]
    ExternalOverlapsLabeled(String),
    #[error("unlabeled pool is empty")]
    EmptyPool,
    #[error("invalid classifier spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Reducer(#[from] DimredError),
}

pub fn label_os(survival_years: f64) -> Result<u8, ModelError> {
    if survival_years.is_nan() || survival_years < 0.0 {
        return Err(ModelError::NegativeSurvival(survival_years));
    }
    Ok(u8::from(survival_years > SURVIVAL_THRESHOLD_YEARS))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierMethod {
    LogisticRegression,
    GaussianNb,
    Knn,
    DecisionTree,
    RandomForest,
    ExtraTrees,
    GradientBoosting,
    Adaboost,
    Mlp,
    SoftVoting,
}

impl ClassifierMethod {
    pub const ALL: [ClassifierMethod; 10] = [
        Self::LogisticRegression,
        Self::GaussianNb,
        Self::Knn,
        Self::DecisionTree,
        Self::RandomForest,
        Self::ExtraTrees,
        Self::GradientBoosting,
        Self::Adaboost,
        Self::Mlp,
        Self::SoftVoting,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LogisticRegression => "logistic_regression",
            Self::GaussianNb => "gaussian_nb",
            Self::Knn => "knn",
            Self::DecisionTree => "decision_tree",
            Self::RandomForest => "random_forest",
            Self::ExtraTrees => "extra_trees",
            Self::GradientBoosting => "gradient_boosting",
            Self::Adaboost => "adaboost",
            Self::Mlp => "mlp",
            Self::SoftVoting => "soft_voting",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierParams {
    /// Inverse L2 strength for logistic regression.
    pub c: f64,
    pub n_neighbors: usize,
    pub var_smoothing: f64,
    /// Depth limit for single trees and forests; `None` grows until pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub n_estimators: usize,
    pub gb_max_depth: usize,
    pub learning_rate: f64,
    pub adaboost_rounds: usize,
    pub hidden_units: usize,
    pub mlp_learning_rate: f64,
    pub mlp_alpha: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub validation_fraction: f64,
    pub patience: usize,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            n_neighbors: 5,
            var_smoothing: 1e-9,
            max_depth: None,
            min_samples_leaf: 1,
            n_estimators: 100,
            gb_max_depth: 3,
            learning_rate: 0.1,
            adaboost_rounds: 50,
            hidden_units: 64,
            mlp_learning_rate: 1e-3,
            mlp_alpha: 1e-4,
            batch_size: 32,
            max_epochs: 200,
            validation_fraction: 0.1,
            patience: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub method: ClassifierMethod,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: ClassifierParams,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<ClassifierSpec>,
}

impl ClassifierSpec {
    pub fn new(method: ClassifierMethod, seed: u64) -> Self {
        Self { method, seed, params: ClassifierParams::default(), members: Vec::new() }
    }

    pub fn soft_voting(members: Vec<ClassifierSpec>) -> Self {
        Self { method: ClassifierMethod::SoftVoting, seed: 0, params: ClassifierParams::default(), members }
    }

    /// Short display name, e.g. `soft_voting(logistic_regression+knn)`.
    pub fn label(&self) -> String {
        if self.method == ClassifierMethod::SoftVoting {
            let inner: Vec<String> = self.members.iter().map(Self::label).collect();
            format!("soft_voting({})", inner.join("+"))
        } else {
            self.method.as_str().to_string()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let p = &self.params;
        let bad = |m: &str| Err(ModelError::InvalidSpec(m.to_string()));
        match self.method {
            ClassifierMethod::SoftVoting => {
                if self.members.len() < 2 {
                    return bad("soft_voting needs at least two members");
                }
                for m in &self.members {
                    m.validate()?;
                }
            }
            _ if !self.members.is_empty() => return bad("only soft_voting takes members"),
            ClassifierMethod::LogisticRegression if !(p.c > 0.0) => return bad("c must be positive"),
            ClassifierMethod::Knn if p.n_neighbors == 0 => return bad("n_neighbors must be ≥ 1"),
            ClassifierMethod::RandomForest | ClassifierMethod::ExtraTrees | ClassifierMethod::GradientBoosting if p.n_estimators == 0 => {
                return bad("n_estimators must be ≥ 1")
            }
            ClassifierMethod::Mlp if p.hidden_units == 0 || p.batch_size == 0 => return bad("hidden_units and batch_size must be ≥ 1"),
            _ => {}
        }
        if p.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be ≥ 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum FittedModel {
    LogisticRegression(logistic::LogisticModel),
    GaussianNb(nb::GaussianNb),
    Knn(knn::Knn),
    Tree(tree::Tree),
    Forest(forest::Forest),
    GradientBoosting(forest::GradientBoosting),
    Adaboost(forest::AdaBoost),
    Mlp(mlp::Mlp),
    SoftVoting(Vec<FittedModel>),
}

pub(crate) fn check_training(x: &FeatureMatrix, y: &[u8]) -> Result<(), ModelError> {
    if x.n_rows() != y.len() {
        return Err(ModelError::LengthMismatch { rows: x.n_rows(), labels: y.len() });
    }
    if y.iter().any(|&v| v > 1) {
        return Err(ModelError::NonBinaryLabel);
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFiniteInput);
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(ModelError::SingleClassTraining);
    }
    Ok(())
}

pub fn train(spec: &ClassifierSpec, x: &FeatureMatrix, y: &[u8]) -> Result<FittedModel, ModelError> {
    spec.validate()?;
    check_training(x, y)?;
    let p = &spec.params;
    Ok(match spec.method {
        ClassifierMethod::LogisticRegression => FittedModel::LogisticRegression(logistic::LogisticModel::fit(x, y, p.c)),
        ClassifierMethod::GaussianNb => FittedModel::GaussianNb(nb::GaussianNb::fit(x, y, p.var_smoothing)),
        ClassifierMethod::Knn => FittedModel::Knn(knn::Knn::fit(x, y, p.n_neighbors)),
        ClassifierMethod::DecisionTree => {
            let w = vec![1.0; y.len()];
            let t: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
            let opts = tree::TreeOptions { max_depth: p.max_depth, min_samples_leaf: p.min_samples_leaf, ..Default::default() };
            FittedModel::Tree(tree::Tree::fit(x, &t, &w, &opts, spec.seed))
        }
        ClassifierMethod::RandomForest => FittedModel::Forest(forest::Forest::fit(x, y, p, spec.seed, false)),
        ClassifierMethod::ExtraTrees => FittedModel::Forest(forest::Forest::fit(x, y, p, spec.seed, true)),
        ClassifierMethod::GradientBoosting => FittedModel::GradientBoosting(forest::GradientBoosting::fit(x, y, p)),
        ClassifierMethod::Adaboost => FittedModel::Adaboost(forest::AdaBoost::fit(x, y, p.adaboost_rounds)),
        ClassifierMethod::Mlp => FittedModel::Mlp(mlp::Mlp::fit(x, y, p, spec.seed)),
        ClassifierMethod::SoftVoting => {
            let members = spec.members.iter().map(|m| train(m, x, y)).collect::<Result<Vec<_>, _>>()?;
            FittedModel::SoftVoting(members)
        }
    })
}

impl FittedModel {
    /// Probability of class 1 per row, clamped into [0, 1].
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        let raw = match self {
            Self::LogisticRegression(m) => m.predict_proba(x),
            Self::GaussianNb(m) => m.predict_proba(x),
            Self::Knn(m) => m.predict_proba(x),
            Self::Tree(m) => x.rows().map(|r| m.predict(r)).collect(),
            Self::Forest(m) => m.predict_proba(x),
            Self::GradientBoosting(m) => m.predict_proba(x),
            Self::Adaboost(m) => m.predict_proba(x),
            Self::Mlp(m) => m.predict_proba(x),
            Self::SoftVoting(members) => {
                let mut acc = vec![0.0; x.n_rows()];
                for m in members {
                    for (a, p) in acc.iter_mut().zip(m.predict_proba(x)) {
                        *a += p;
                    }
                }
                acc.iter().map(|a| a / members.len() as f64).collect()
            }
        };
        raw.into_iter().map(|p| if p.is_nan() { 0.5 } else { p.clamp(0.0, 1.0) }).collect()
    }

    pub fn predict(&self, x: &FeatureMatrix, threshold: f64) -> Vec<u8> {
        self.predict_proba(x).into_iter().map(|p| u8::from(p > threshold)).collect()
    }
}

pub fn predict_proba(model: &FittedModel, x: &FeatureMatrix) -> Vec<f64> {
    model.predict_proba(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survival_labels() {
        assert_eq!(label_os(5.0), Ok(1));
        assert_eq!(label_os(3.0), Ok(0));
        assert_eq!(label_os(4.0), Ok(0));
        assert_eq!(label_os(-0.1), Err(ModelError::NegativeSurvival(-0.1)));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ClassifierSpec::soft_voting(vec![
            ClassifierSpec::new(ClassifierMethod::LogisticRegression, 0),
            ClassifierSpec::new(ClassifierMethod::RandomForest, 7),
        ]);
        let text = serde_json::to_string(&spec).unwrap();
        let back: ClassifierSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(spec.label(), "soft_voting(logistic_regression+random_forest)");
        let minimal: ClassifierSpec = serde_json::from_str(r#"{"method":"knn"}"#).unwrap();
        assert_eq!(minimal.params.n_neighbors, 5);
    }

    #[test]
    fn voting_needs_two_members() {
        let spec = ClassifierSpec::soft_voting(vec![ClassifierSpec::new(ClassifierMethod::Knn, 0)]);
        assert!(matches!(spec.validate(), Err(ModelError::InvalidSpec(_))));
    }

    #[test]
    fn constant_labels_rejected() {
        let x = FeatureMatrix::from_unnamed_rows(vec![vec![0.0], vec![1.0], vec![2.0]]);
        for m in ClassifierMethod::ALL {
            let spec = if m == ClassifierMethod::SoftVoting {
                ClassifierSpec::soft_voting(vec![
                    ClassifierSpec::new(ClassifierMethod::Knn, 0),
                    ClassifierSpec::new(ClassifierMethod::GaussianNb, 0),
                ])
            } else {
                ClassifierSpec::new(m, 0)
            };
            assert_eq!(train(&spec, &x, &[1, 1, 1]).unwrap_err(), ModelError::SingleClassTraining, "{m:?}");
        }
    }
}
