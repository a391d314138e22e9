//! Feature selection and embedding reducers with a fit/apply split.
//!
//! Fitting sees labels; a [`FittedReducer`] holds only the learned transform,
//! so applying it to held-out rows cannot read their labels.

pub mod embed;
pub mod info;
pub mod lasso;
pub mod relieff;
pub mod score;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;

pub use lasso::{coordinate_descent, soft_threshold};

#[derive(Debug, Error, PartialEq)]
pub enum DimredError {
    #[error("{0} is supervised and needs labels")]
    SupervisedWithoutLabels(&'static str),
    #[error("chi-square needs nonnegative inputs; feature `{0}` has a negative value")]
    NegativeInputForChiSquare(String),
    #[error("k_out {k} exceeds the {available} usable features")]
    KTooLarge { k: usize, available: usize },
    #[error("columns differ from the fit-time features")]
    ColumnMismatch,
    #[error("non-finite input")]
    NonFinite,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("{0} needs an explicit seed")]
    MissingSeed(&'static str),
    #[error("invalid reducer spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReducerMethod {
    VarianceThreshold,
    CorrelationFilter,
    AnovaF,
    ChiSquare,
    MutualInfo,
    GainRatio,
    Relieff,
    Lasso,
    ElasticNet,
    RfeLogistic,
    Pca,
    FeatureAgglomeration,
    GaussianRandomProjection,
    SparseRandomProjection,
}

impl ReducerMethod {
    pub const ALL: [ReducerMethod; 14] = [
        Self::VarianceThreshold,
        Self::CorrelationFilter,
        Self::AnovaF,
        Self::ChiSquare,
        Self::MutualInfo,
        Self::GainRatio,
        Self::Relieff,
        Self::Lasso,
        Self::ElasticNet,
        Self::RfeLogistic,
        Self::Pca,
        Self::FeatureAgglomeration,
        Self::GaussianRandomProjection,
        Self::SparseRandomProjection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::VarianceThreshold => "variance_threshold",
            Self::CorrelationFilter => "correlation_filter",
            Self::AnovaF => "anova_f",
            Self::ChiSquare => "chi_square",
            Self::MutualInfo => "mutual_info",
            Self::GainRatio => "gain_ratio",
            Self::Relieff => "relieff",
            Self::Lasso => "lasso",
            Self::ElasticNet => "elastic_net",
            Self::RfeLogistic => "rfe_logistic",
            Self::Pca => "pca",
            Self::FeatureAgglomeration => "feature_agglomeration",
            Self::GaussianRandomProjection => "gaussian_random_projection",
            Self::SparseRandomProjection => "sparse_random_projection",
        }
    }

    pub fn is_supervised(self) -> bool {
        matches!(
            self,
            Self::AnovaF
                | Self::ChiSquare
                | Self::MutualInfo
                | Self::GainRatio
                | Self::Relieff
                | Self::Lasso
                | Self::ElasticNet
                | Self::RfeLogistic
        )
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Self::Relieff | Self::GaussianRandomProjection | Self::SparseRandomProjection)
    }

    pub fn is_selection(self) -> bool {
        !matches!(self, Self::Pca | Self::FeatureAgglomeration | Self::GaussianRandomProjection | Self::SparseRandomProjection)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReducerParams {
    /// Features with population variance at or below this are dropped.
    pub variance_threshold: f64,
    /// Greedy filter drops a feature whose |r| with a kept one reaches this.
    pub correlation_threshold: f64,
    pub n_bins: usize,
    pub relieff_neighbors: usize,
    pub relieff_samples: usize,
    /// Fixed penalty; `None` walks the automatic λ path.
    pub lambda: Option<f64>,
    /// Elastic-net mixing, 1 = lasso.
    pub l1_ratio: f64,
    pub path_length: usize,
    pub path_ratio: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Fraction of remaining features removed per elimination round.
    pub rfe_step: f64,
}

impl Default for ReducerParams {
    fn default() -> Self {
        Self {
            variance_threshold: 0.0,
            correlation_threshold: 0.9,
            n_bins: 10,
            relieff_neighbors: 10,
            relieff_samples: 100,
            lambda: None,
            l1_ratio: 0.5,
            path_length: 100,
            path_ratio: 1e-4,
            max_iter: 1000,
            tol: 1e-7,
            rfe_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducerSpec {
    pub method: ReducerMethod,
    pub k_out: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: ReducerParams,
}

impl ReducerSpec {
    pub fn new(method: ReducerMethod, k_out: usize) -> Self {
        let seed = method.is_stochastic().then_some(0);
        Self { method, k_out, seed, params: ReducerParams::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn label(&self) -> String {
        format!("{}_k{}", self.method.as_str(), self.k_out)
    }

    pub fn validate(&self, n_features: usize) -> Result<(), DimredError> {
        if self.k_out == 0 {
            return Err(DimredError::InvalidSpec("k_out must be ≥ 1".into()));
        }
        if self.k_out > n_features {
            return Err(DimredError::KTooLarge { k: self.k_out, available: n_features });
        }
        if self.method.is_stochastic() && self.seed.is_none() {
            return Err(DimredError::MissingSeed(self.method.as_str()));
        }
        let p = &self.params;
        if p.n_bins < 2 || !(0.0..=1.0).contains(&p.l1_ratio) || p.l1_ratio == 0.0 && self.method == ReducerMethod::ElasticNet {
            return Err(DimredError::InvalidSpec("n_bins ≥ 2 and 0 < l1_ratio ≤ 1 required".into()));
        }
        if !(p.rfe_step > 0.0 && p.rfe_step < 1.0) {
            return Err(DimredError::InvalidSpec("rfe_step must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    /// Column indices into the fit-time features, in rank order.
    Select { columns: Vec<usize> },
    /// `out = (x − center) · Wᵀ`, one weight row per output column.
    Project { center: Vec<f64>, weights: Vec<Vec<f64>> },
    /// Mean of standardized member columns per cluster.
    Agglomerate { mean: Vec<f64>, scale: Vec<f64>, clusters: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedReducer {
    pub spec: ReducerSpec,
    pub input_ids: Vec<String>,
    output_ids: Vec<String>,
    /// Per-feature scores for scoring selectors, keyed like `input_ids`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    pub transform: Transform,
}

impl FittedReducer {
    pub fn output_ids(&self) -> &[String] {
        &self.output_ids
    }

    pub fn selected_ids(&self) -> Option<&[String]> {
        matches!(self.transform, Transform::Select { .. }).then_some(self.output_ids.as_slice())
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix, DimredError> {
        if x.feature_ids != self.input_ids {
            return Err(DimredError::ColumnMismatch);
        }
        match &self.transform {
            Transform::Select { columns } => Ok(x.select_columns(columns)),
            Transform::Project { center, weights } => {
                let mut data = Vec::with_capacity(x.n_rows() * weights.len());
                for row in x.rows() {
                    for w in weights {
                        data.push(row.iter().zip(center).zip(w).map(|((v, c), w)| (v - c) * w).sum());
                    }
                }
                Ok(FeatureMatrix::new(x.case_ids.clone(), self.output_ids.clone(), data).expect("shape"))
            }
            Transform::Agglomerate { mean, scale, clusters } => {
                let mut data = Vec::with_capacity(x.n_rows() * clusters.len());
                for row in x.rows() {
                    for c in clusters {
                        let s: f64 = c.iter().map(|&j| (row[j] - mean[j]) / scale[j]).sum();
                        data.push(s / c.len() as f64);
                    }
                }
                Ok(FeatureMatrix::new(x.case_ids.clone(), self.output_ids.clone(), data).expect("shape"))
            }
        }
    }
}

/// Indices of the `k` best non-NaN scores, descending; ties go to the
/// lexicographically smaller feature id.
pub(crate) fn top_k(scores: &[f64], ids: &[String], k: usize) -> Result<Vec<usize>, DimredError> {
    let mut order: Vec<usize> = (0..scores.len()).filter(|&j| !scores[j].is_nan()).collect();
    if order.len() < k {
        return Err(DimredError::KTooLarge { k, available: order.len() });
    }
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then_with(|| ids[a].cmp(&ids[b])));
    order.truncate(k);
    Ok(order)
}

pub fn fit_reducer(spec: &ReducerSpec, x: &FeatureMatrix, y: Option<&[u8]>) -> Result<FittedReducer, DimredError> {
    spec.validate(x.n_cols())?;
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(DimredError::NonFinite);
    }
    let method = spec.method;
    let labels = if method.is_supervised() {
        let y = y.ok_or(DimredError::SupervisedWithoutLabels(method.as_str()))?;
        if y.len() != x.n_rows() {
            return Err(DimredError::LengthMismatch { rows: x.n_rows(), labels: y.len() });
        }
        if y.iter().any(|&v| v > 1) {
            return Err(DimredError::InvalidSpec("labels must be 0 or 1".into()));
        }
        Some(y)
    } else {
        None
    };

    if method.is_selection() {
        // Work in feature-id order so results do not depend on column order.
        let mut canon: Vec<usize> = (0..x.n_cols()).collect();
        canon.sort_by(|&a, &b| x.feature_ids[a].cmp(&x.feature_ids[b]));
        let xc = x.select_columns(&canon);
        let (picked, scores) = select(spec, &xc, labels)?;
        let columns: Vec<usize> = picked.iter().map(|&j| canon[j]).collect();
        let scores = scores.map(|s| {
            let mut out = vec![f64::NAN; s.len()];
            for (j, v) in s.into_iter().enumerate() {
                out[canon[j]] = v;
            }
            out
        });
        return Ok(FittedReducer {
            spec: spec.clone(),
            input_ids: x.feature_ids.clone(),
            output_ids: columns.iter().map(|&j| x.feature_ids[j].clone()).collect(),
            scores,
            transform: Transform::Select { columns },
        });
    }

    let (prefix, transform) = match method {
        ReducerMethod::Pca => ("pca", embed::pca(x, spec.k_out)?),
        ReducerMethod::FeatureAgglomeration => ("agglo", embed::agglomerate(x, spec.k_out)),
        ReducerMethod::GaussianRandomProjection => ("grp", embed::gaussian_projection(x.n_cols(), spec.k_out, spec.seed.unwrap_or(0))),
        ReducerMethod::SparseRandomProjection => ("srp", embed::sparse_projection(x.n_cols(), spec.k_out, spec.seed.unwrap_or(0))),
        _ => unreachable!("selection handled above"),
    };
    Ok(FittedReducer {
        spec: spec.clone(),
        input_ids: x.feature_ids.clone(),
        output_ids: (1..=spec.k_out).map(|i| format!("{prefix}_{i}")).collect(),
        scores: None,
        transform,
    })
}

fn select(spec: &ReducerSpec, x: &FeatureMatrix, y: Option<&[u8]>) -> Result<(Vec<usize>, Option<Vec<f64>>), DimredError> {
    let k = spec.k_out;
    let p = &spec.params;
    let ids = &x.feature_ids;
    let y = || y.expect("labels checked");
    let scored = |scores: Vec<f64>| -> Result<(Vec<usize>, Option<Vec<f64>>), DimredError> { Ok((top_k(&scores, ids, k)?, Some(scores))) };
    match spec.method {
        ReducerMethod::VarianceThreshold => scored(score::variance_scores(x, p.variance_threshold)),
        ReducerMethod::CorrelationFilter => Ok((score::correlation_filter(x, p.correlation_threshold, k)?, None)),
        ReducerMethod::AnovaF => scored(score::anova_f(x, y())),
        ReducerMethod::ChiSquare => scored(score::chi_square(x, y())?),
        ReducerMethod::MutualInfo => scored(info::mutual_info_scores(x, y(), p.n_bins)),
        ReducerMethod::GainRatio => scored(info::gain_ratio_scores(x, y(), p.n_bins)),
        ReducerMethod::Relieff => scored(relieff::relieff(x, y(), p.relieff_neighbors, p.relieff_samples, spec.seed.unwrap_or(0))),
        ReducerMethod::Lasso | ReducerMethod::ElasticNet => {
            let alpha = if spec.method == ReducerMethod::Lasso { 1.0 } else { p.l1_ratio };
            let (picked, beta) = lasso::select(x, y(), k, alpha, p)?;
            Ok((picked, Some(beta)))
        }
        ReducerMethod::RfeLogistic => Ok((score::rfe_logistic(x, y(), k, p.rfe_step)?, None)),
        _ => unreachable!(),
    }
}
