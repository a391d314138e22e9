use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::stats::descriptive::{average_ranks, MeanStd};

pub const METRIC_NAMES: [&str; 6] = ["accuracy", "precision", "recall", "f1", "roc_auc", "specificity"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFlag {
    UndefinedPrecision,
    UndefinedRecall,
    UndefinedSpecificity,
    UndefinedAuc,
}

/// Metrics for one evaluation split; undefined ratios are reported as 0
/// (AUC as 0.5) and flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub n: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
    pub specificity: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<MetricFlag>,
}

impl SplitMetrics {
    pub fn values(&self) -> [f64; 6] {
        [self.accuracy, self.precision, self.recall, self.f1, self.roc_auc, self.specificity]
    }
}

/// Mann–Whitney formulation with average ranks; `None` for single-class truth.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Option<f64> {
    let n1 = y_true.iter().filter(|&&v| v == 1).count();
    let n0 = y_true.len() - n1;
    if n1 == 0 || n0 == 0 {
        return None;
    }
    let ranks = average_ranks(scores);
    let r1: f64 = ranks.iter().zip(y_true).filter(|(_, &y)| y == 1).map(|(r, _)| r).sum();
    Some((r1 - (n1 * (n1 + 1)) as f64 / 2.0) / (n1 as f64 * n0 as f64))
}

pub fn compute_metrics(y_true: &[u8], y_prob: &[f64], threshold: f64) -> Result<SplitMetrics, ModelError> {
    if y_true.len() != y_prob.len() {
        return Err(ModelError::LengthMismatch { rows: y_prob.len(), labels: y_true.len() });
    }
    if y_true.iter().any(|&v| v > 1) {
        return Err(ModelError::NonBinaryLabel);
    }
    if let Some(&p) = y_prob.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(ModelError::InvalidProbability(p));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&y, &p) in y_true.iter().zip(y_prob) {
        match (y == 1, p > threshold) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    let mut flags = Vec::new();
    let mut ratio = |num: usize, den: usize, flag: MetricFlag| {
        if den == 0 {
            flags.push(flag);
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp, MetricFlag::UndefinedPrecision);
    let recall = ratio(tp, tp + fn_, MetricFlag::UndefinedRecall);
    let specificity = ratio(tn, tn + fp, MetricFlag::UndefinedSpecificity);
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    let roc_auc = roc_auc(y_true, y_prob).unwrap_or_else(|| {
        flags.push(MetricFlag::UndefinedAuc);
        0.5
    });
    let n = y_true.len();
    Ok(SplitMetrics {
        n,
        accuracy: if n == 0 { 0.0 } else { (tp + tn) as f64 / n as f64 },
        precision,
        recall,
        f1,
        roc_auc,
        specificity,
        flags,
    })
}

/// Mean ± population std of each metric across folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub roc_auc: MeanStd,
    pub specificity: MeanStd,
}

impl EvalMetrics {
    pub fn from_splits(splits: &[SplitMetrics]) -> Self {
        let col = |k: usize| MeanStd::of(&splits.iter().map(|s| s.values()[k]).collect::<Vec<_>>());
        Self { accuracy: col(0), precision: col(1), recall: col(2), f1: col(3), roc_auc: col(4), specificity: col(5) }
    }

    pub fn values(&self) -> [MeanStd; 6] {
        [self.accuracy, self.precision, self.recall, self.f1, self.roc_auc, self.specificity]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_arithmetic() {
        let mut y = Vec::new();
        let mut p = Vec::new();
        for (truth, pred, count) in [(1, 1.0, 40), (0, 1.0, 10), (1, 0.0, 20), (0, 0.0, 30)] {
            y.extend(std::iter::repeat_n(truth, count));
            p.extend(std::iter::repeat_n(pred, count));
        }
        let m = compute_metrics(&y, &p, 0.5).unwrap();
        assert_eq!(m.accuracy, 0.7);
        assert_eq!(m.precision, 0.8);
        assert_eq!(m.recall, 40.0 / 60.0);
        assert_eq!(m.specificity, 0.75);
        assert!((m.f1 - 0.7272727272727273).abs() < 1e-12);
        assert!(m.flags.is_empty());
    }

    #[test]
    fn perfect_and_chance() {
        let y = [0, 0, 1, 1];
        let m = compute_metrics(&y, &[0.0, 0.0, 1.0, 1.0], 0.5).unwrap();
        assert_eq!(m.values(), [1.0; 6]);
        let m = compute_metrics(&y, &[0.5; 4], 0.5).unwrap();
        assert_eq!(m.roc_auc, 0.5);
        assert_eq!(m.flags, vec![MetricFlag::UndefinedPrecision]);
        assert_eq!(m.precision, 0.0);
    }

    #[test]
    fn single_class_auc_flagged() {
        let m = compute_metrics(&[1, 1], &[0.2, 0.9], 0.5).unwrap();
        assert_eq!(m.roc_auc, 0.5);
        assert!(m.flags.contains(&MetricFlag::UndefinedAuc));
        assert!(m.flags.contains(&MetricFlag::UndefinedSpecificity));
    }

    #[test]
    fn rejects_out_of_range_probability() {
        assert_eq!(compute_metrics(&[1], &[1.5], 0.5), Err(ModelError::InvalidProbability(1.5)));
    }
}
