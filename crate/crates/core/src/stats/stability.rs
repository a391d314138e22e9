//! Per-model agreement battery between ground-truth and model-mask features.

use rayon::prelude::*;
use serde::Serialize;

use super::correlation::{icc_2_1, spearman};
use super::descriptive::{is_constant, mean};
use super::fdr::bh_fdr;
use super::manova::{default_reduce_to, manova_two_group, ManovaResult};
use super::shapiro::shapiro_wilk;
use super::ttest::paired_t;
use super::wilcoxon::wilcoxon_signed_rank;
use super::StatsError;
use crate::features::FeatureMatrix;

pub const ALPHA: f64 = 0.05;

/// Which test a feature's paired differences were routed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    PairedT,
    Wilcoxon,
    /// Every difference is zero; nothing to test.
    Identical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureStability {
    pub feature_id: String,
    /// Shapiro on the model-mask values; `None` when they are constant.
    pub raw_normal: Option<bool>,
    pub route: Route,
    pub spearman: Option<f64>,
    pub icc: Option<f64>,
    pub p: Option<f64>,
    pub wilcoxon_w: Option<f64>,
    pub wilcoxon_z: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilcoxonSummary {
    pub tested: usize,
    pub mean_w: f64,
    pub mean_abs_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub model_name: String,
    pub n_cases: usize,
    pub total_features: usize,
    pub shapiro_normal_count: usize,
    pub shapiro_not_normal_count: usize,
    /// Constant model-mask features, left out of the Shapiro counts.
    pub shapiro_untestable_count: usize,
    pub routed_t_count: usize,
    pub routed_wilcoxon_count: usize,
    pub identical_count: usize,
    pub mean_spearman: f64,
    /// Features whose Spearman is undefined (a constant side); reported as 0
    /// and left out of the mean.
    pub spearman_flagged: usize,
    pub mean_icc: f64,
    /// Features with all cells equal; ICC reported as 1 and left out of the mean.
    pub icc_flagged: usize,
    pub wilcoxon: WilcoxonSummary,
    pub manova: Option<ManovaResult>,
    pub manova_error: Option<String>,
    pub ttest_significant_count: usize,
    pub features: Vec<FeatureStability>,
}

impl StabilityReport {
    pub fn shapiro_cell(&self) -> String {
        format!("{}/{}", self.shapiro_normal_count, self.shapiro_not_normal_count)
    }

    pub fn significance_cell(&self) -> String {
        format!("{}/{}", self.ttest_significant_count, self.total_features)
    }
}

fn assess(feature_id: &str, gt: &[f64], model: &[f64]) -> Result<(FeatureStability, Option<f64>), StatsError> {
    let raw_normal = match shapiro_wilk(model) {
        Ok(r) => Some(r.is_normal(ALPHA)),
        Err(StatsError::ConstantInput) => None,
        Err(e) => return Err(e),
    };
    let spearman = match spearman(gt, model) {
        Ok(v) => Some(v),
        Err(StatsError::ConstantInput) => None,
        Err(e) => return Err(e),
    };
    let icc = match icc_2_1(gt, model) {
        Ok(v) => Some(v),
        Err(StatsError::DegenerateVariance) => None,
        Err(e) => return Err(e),
    };
    let diffs: Vec<f64> = model.iter().zip(gt).map(|(m, g)| m - g).collect();
    let mut out = FeatureStability {
        feature_id: feature_id.to_string(),
        raw_normal,
        route: Route::Identical,
        spearman,
        icc,
        p: None,
        wilcoxon_w: None,
        wilcoxon_z: None,
        significant: false,
    };
    if diffs.iter().all(|d| *d == 0.0) {
        return Ok((out, None));
    }
    let normal = !is_constant(&diffs) && shapiro_wilk(&diffs)?.is_normal(ALPHA);
    if normal {
        let t = paired_t(model, gt)?;
        out.route = Route::PairedT;
        out.p = Some(t.p);
        Ok((out, Some(t.p)))
    } else {
        let w = wilcoxon_signed_rank(model, gt)?;
        out.route = Route::Wilcoxon;
        out.p = Some(w.p);
        out.wilcoxon_w = Some(w.w);
        out.wilcoxon_z = Some(w.z);
        Ok((out, None))
    }
}

/// Compares `model` against `gt` on the cases both matrices share.
pub fn stability_report(gt: &FeatureMatrix, model: &FeatureMatrix, model_name: &str) -> Result<StabilityReport, StatsError> {
    if gt.feature_ids != model.feature_ids {
        return Err(StatsError::FeatureMismatch);
    }
    let pairs = gt.aligned_rows(model);
    let n = pairs.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { needed: 3, got: n });
    }
    let gt_rows: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let model_rows: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let gt = gt.select_rows(&gt_rows);
    let model = model.select_rows(&model_rows);

    let assessed: Vec<(FeatureStability, Option<f64>)> =
        (0..gt.n_cols()).into_par_iter().map(|j| assess(&gt.feature_ids[j], &gt.column(j), &model.column(j))).collect::<Result<_, _>>()?;

    let t_family: Vec<(usize, f64)> = assessed.iter().enumerate().filter_map(|(i, (_, p))| p.map(|p| (i, p))).collect();
    let rejected = bh_fdr(&t_family.iter().map(|x| x.1).collect::<Vec<_>>(), ALPHA)?;
    let mut features: Vec<FeatureStability> = assessed.into_iter().map(|x| x.0).collect();
    for ((i, _), r) in t_family.iter().zip(&rejected) {
        features[*i].significant = *r;
    }

    let count = |f: &dyn Fn(&FeatureStability) -> bool| features.iter().filter(|x| f(x)).count();
    let spearmans: Vec<f64> = features.iter().filter_map(|f| f.spearman).collect();
    let iccs: Vec<f64> = features.iter().filter_map(|f| f.icc).collect();
    let ws: Vec<f64> = features.iter().filter_map(|f| f.wilcoxon_w).collect();
    let zs: Vec<f64> = features.iter().filter_map(|f| f.wilcoxon_z.map(f64::abs)).collect();
    let mean_or = |v: &[f64], fallback: f64| if v.is_empty() { fallback } else { mean(v) };

    let (manova, manova_error) = match manova_two_group(&gt, &model, default_reduce_to(2 * n)) {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };

    Ok(StabilityReport {
        model_name: model_name.to_string(),
        n_cases: n,
        total_features: features.len(),
        shapiro_normal_count: count(&|f| f.raw_normal == Some(true)),
        shapiro_not_normal_count: count(&|f| f.raw_normal == Some(false)),
        shapiro_untestable_count: count(&|f| f.raw_normal.is_none()),
        routed_t_count: count(&|f| f.route == Route::PairedT),
        routed_wilcoxon_count: count(&|f| f.route == Route::Wilcoxon),
        identical_count: count(&|f| f.route == Route::Identical),
        mean_spearman: mean_or(&spearmans, 0.0),
        spearman_flagged: features.len() - spearmans.len(),
        mean_icc: mean_or(&iccs, 1.0),
        icc_flagged: features.len() - iccs.len(),
        wilcoxon: WilcoxonSummary { tested: ws.len(), mean_w: mean_or(&ws, 0.0), mean_abs_z: mean_or(&zs, 0.0) },
        manova,
        manova_error,
        ttest_significant_count: count(&|f| f.significant),
        features,
    })
}
