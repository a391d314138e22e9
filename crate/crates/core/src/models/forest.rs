//! Tree ensembles: bagged forests, extra trees, gradient boosting, AdaBoost.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::tree::{Node, Tree, TreeOptions};
use super::ClassifierParams;
use crate::features::FeatureMatrix;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct Forest {
    pub extra: bool,
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Random forest (`extra = false`: bootstrap rows, exhaustive thresholds)
    /// or extra trees (all rows, random thresholds). Both sample
    /// `max(1, ⌊√p⌋)` features per split; tree `i` uses RNG stream `i`.
    pub fn fit(x: &FeatureMatrix, y: &[u8], params: &ClassifierParams, seed: u64, extra: bool) -> Self {
        let n = x.n_rows();
        let t: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let opts = TreeOptions {
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            max_features: Some(((x.n_cols() as f64).sqrt() as usize).max(1)),
            random_thresholds: extra,
        };
        let trees = (0..params.n_estimators)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let mut w = vec![if extra { 1.0 } else { 0.0 }; n];
                if !extra {
                    for _ in 0..n {
                        w[rng.random_range(0..n)] += 1.0;
                    }
                }
                Tree::fit_with_rng(x, &t, &w, &opts, rng)
            })
            .collect();
        Self { extra, trees }
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        x.rows().map(|r| self.trees.iter().map(|t| t.predict(r)).sum::<f64>() / self.trees.len() as f64).collect()
    }
}

/// Binomial-deviance gradient boosting with Newton leaf values.
#[derive(Debug, Clone, Serialize)]
pub struct GradientBoosting {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GradientBoosting {
    pub fn fit(x: &FeatureMatrix, y: &[u8], params: &ClassifierParams) -> Self {
        let n = x.n_rows();
        let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let prior = yf.iter().sum::<f64>() / n as f64;
        let init = (prior / (1.0 - prior)).ln();
        let mut f = vec![init; n];
        let opts = TreeOptions { max_depth: Some(params.gb_max_depth), min_samples_leaf: params.min_samples_leaf, ..Default::default() };
        let ones = vec![1.0; n];
        let mut trees = Vec::with_capacity(params.n_estimators);
        for _ in 0..params.n_estimators {
            let p: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
            let r: Vec<f64> = yf.iter().zip(&p).map(|(y, p)| y - p).collect();
            let mut tree = Tree::fit(x, &r, &ones, &opts, 0);
            let leaves: Vec<usize> = x.rows().map(|row| tree.leaf(row)).collect();
            let mut num = vec![0.0; tree.nodes.len()];
            let mut den = vec![0.0; tree.nodes.len()];
            for i in 0..n {
                num[leaves[i]] += r[i];
                den[leaves[i]] += p[i] * (1.0 - p[i]);
            }
            for k in 0..tree.nodes.len() {
                if matches!(tree.nodes[k], Node::Leaf { .. }) {
                    tree.set_leaf_value(k, if den[k].abs() < 1e-150 { 0.0 } else { num[k] / den[k] });
                }
            }
            for i in 0..n {
                f[i] += params.learning_rate * tree.predict(x.row(i));
            }
            trees.push(tree);
        }
        Self { init, learning_rate: params.learning_rate, trees }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.init + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        x.rows().map(|r| sigmoid(self.decision(r))).collect()
    }
}

/// Discrete two-class SAMME over depth-1 stumps.
#[derive(Debug, Clone, Serialize)]
pub struct AdaBoost {
    pub stumps: Vec<Tree>,
    pub alphas: Vec<f64>,
}

impl AdaBoost {
    pub fn fit(x: &FeatureMatrix, y: &[u8], rounds: usize) -> Self {
        let n = x.n_rows();
        let t: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let mut w = vec![1.0 / n as f64; n];
        let opts = TreeOptions { max_depth: Some(1), min_samples_leaf: 1, ..Default::default() };
        let mut stumps = Vec::new();
        let mut alphas = Vec::new();
        for _ in 0..rounds.max(1) {
            let stump = Tree::fit(x, &t, &w, &opts, 0);
            let wrong: Vec<bool> = x.rows().zip(y).map(|(r, &yi)| u8::from(stump.predict(r) > 0.5) != yi).collect();
            let total: f64 = w.iter().sum();
            let err: f64 = w.iter().zip(&wrong).filter(|(_, &m)| m).map(|(w, _)| w).sum::<f64>() / total;
            if err <= 0.0 {
                stumps.push(stump);
                alphas.push(1.0);
                break;
            }
            if err >= 0.5 {
                if stumps.is_empty() {
                    stumps.push(stump);
                    alphas.push(1.0);
                }
                break;
            }
            let alpha = ((1.0 - err) / err).ln();
            for (wi, &m) in w.iter_mut().zip(&wrong) {
                if m {
                    *wi *= alpha.exp();
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
            stumps.push(stump);
            alphas.push(alpha);
        }
        Self { stumps, alphas }
    }

    /// Vote margin `Σα·(±1) / Σα` in [−1, 1].
    pub fn decision(&self, row: &[f64]) -> f64 {
        let total: f64 = self.alphas.iter().sum();
        let f: f64 = self.stumps.iter().zip(&self.alphas).map(|(s, a)| if s.predict(row) > 0.5 { *a } else { -*a }).sum();
        f / total
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        x.rows().map(|r| sigmoid(2.0 * self.decision(r))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn threshold_data() -> (FeatureMatrix, Vec<u8>) {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, ((i * 7) % 11) as f64]).collect();
        let y = (0..40).map(|i| u8::from(i >= 20)).collect();
        (FeatureMatrix::from_unnamed_rows(rows), y)
    }

    #[test]
    fn ensembles_learn_a_threshold() {
        let (x, y) = threshold_data();
        let params = ClassifierParams { n_estimators: 20, ..Default::default() };
        let checks: Vec<Vec<f64>> = vec![
            Forest::fit(&x, &y, &params, 3, false).predict_proba(&x),
            Forest::fit(&x, &y, &params, 3, true).predict_proba(&x),
            GradientBoosting::fit(&x, &y, &params).predict_proba(&x),
            AdaBoost::fit(&x, &y, 10).predict_proba(&x),
        ];
        for probs in checks {
            let correct = probs.iter().zip(&y).filter(|(p, &t)| u8::from(**p > 0.5) == t).count();
            assert!(correct >= 38, "{correct}");
        }
    }

    #[test]
    fn forests_are_seed_deterministic() {
        let (x, y) = threshold_data();
        let params = ClassifierParams { n_estimators: 5, ..Default::default() };
        let a = Forest::fit(&x, &y, &params, 11, false);
        let b = Forest::fit(&x, &y, &params, 11, false);
        assert_eq!(a.trees, b.trees);
    }

    #[test]
    fn perfect_stump_stops_early() {
        let (x, y) = threshold_data();
        let m = AdaBoost::fit(&x, &y, 50);
        assert_eq!(m.stumps.len(), 1);
        assert_eq!(m.predict_proba(&x)[0], sigmoid(-2.0));
    }
}
