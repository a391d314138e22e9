//! One-hidden-layer ReLU perceptron with a logistic output, trained by Adam.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ClassifierParams;
use crate::features::FeatureMatrix;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;
const TOL: f64 = 1e-4;

/// Parameters are one flat vector: `W1 (h×p) | b1 (h) | w2 (h) | b2`.
#[derive(Debug, Clone, Serialize)]
pub struct Mlp {
    pub n_inputs: usize,
    pub hidden: usize,
    pub epochs_run: usize,
    #[serde(skip)]
    theta: Vec<f64>,
}

impl Mlp {
    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden * self.n_inputs;
        (w1, w1 + self.hidden, w1 + 2 * self.hidden)
    }

    /// Hidden activations and the output logit.
    fn forward(&self, row: &[f64], hidden: &mut [f64]) -> f64 {
        let (b1, w2, b2) = self.offsets();
        let mut z = self.theta[b2];
        for k in 0..self.hidden {
            let w = &self.theta[k * self.n_inputs..(k + 1) * self.n_inputs];
            let a = (self.theta[b1 + k] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>()).max(0.0);
            hidden[k] = a;
            z += self.theta[w2 + k] * a;
        }
        z
    }

    fn prob(&self, row: &[f64], hidden: &mut [f64]) -> f64 {
        1.0 / (1.0 + (-self.forward(row, hidden)).exp())
    }

    pub fn fit(x: &FeatureMatrix, y: &[u8], params: &ClassifierParams, seed: u64) -> Self {
        let p = x.n_cols();
        let h = params.hidden_units;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self { n_inputs: p, hidden: h, epochs_run: 0, theta: Vec::new() };
        let bound1 = (6.0 / (p + h) as f64).sqrt();
        let bound2 = (2.0 / (h + 1) as f64).sqrt();
        let mut theta = Vec::with_capacity(h * p + 2 * h + 1);
        theta.extend((0..h * p + h).map(|_| rng.random_range(-bound1..bound1)));
        theta.extend((0..h + 1).map(|_| rng.random_range(-bound2..bound2)));
        net.theta = theta;

        let (train, val) = validation_split(y, params.validation_fraction, &mut rng);
        let mut order = train.clone();
        let (b1, w2, b2) = net.offsets();
        let mut m = vec![0.0; net.theta.len()];
        let mut v = vec![0.0; net.theta.len()];
        let mut grad = vec![0.0; net.theta.len()];
        let mut hidden = vec![0.0; h];
        let mut step = 0i32;
        let mut best_score = f64::NEG_INFINITY;
        let mut best_theta = net.theta.clone();
        let mut stale = 0;

        for epoch in 0..params.max_epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(params.batch_size) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let bsz = batch.len() as f64;
                for &i in batch {
                    let row = x.row(i);
                    let delta = (net.prob(row, &mut hidden) - f64::from(y[i])) / bsz;
                    grad[b2] += delta;
                    for k in 0..h {
                        if hidden[k] <= 0.0 {
                            continue;
                        }
                        grad[w2 + k] += delta * hidden[k];
                        let dk = delta * net.theta[w2 + k];
                        grad[b1 + k] += dk;
                        for (g, xv) in grad[k * p..(k + 1) * p].iter_mut().zip(row) {
                            *g += dk * xv;
                        }
                    }
                }
                // L2 on weights only, scaled by batch size.
                let reg = params.mlp_alpha / bsz;
                for j in (0..h * p).chain(w2..w2 + h) {
                    grad[j] += reg * net.theta[j];
                }
                step += 1;
                let lr = params.mlp_learning_rate * (1.0 - BETA2.powi(step)).sqrt() / (1.0 - BETA1.powi(step));
                for j in 0..net.theta.len() {
                    m[j] = BETA1 * m[j] + (1.0 - BETA1) * grad[j];
                    v[j] = BETA2 * v[j] + (1.0 - BETA2) * grad[j] * grad[j];
                    net.theta[j] -= lr * m[j] / (v[j].sqrt() + EPS);
                }
            }
            net.epochs_run = epoch + 1;
            if val.is_empty() {
                continue;
            }
            let correct = val.iter().filter(|&&i| u8::from(net.prob(x.row(i), &mut hidden) > 0.5) == y[i]).count();
            let score = correct as f64 / val.len() as f64;
            if score > best_score + TOL {
                best_score = score;
                best_theta.clone_from(&net.theta);
                stale = 0;
            } else {
                stale += 1;
                if stale >= params.patience {
                    break;
                }
            }
        }
        if !val.is_empty() {
            net.theta = best_theta;
        }
        net
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        let mut hidden = vec![0.0; self.hidden];
        x.rows().map(|r| self.prob(r, &mut hidden)).collect()
    }
}

/// Stratified hold-out; empty when either class is too small to spare a case.
fn validation_split(y: &[u8], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    if fraction > 0.0 {
        for class in 0..2u8 {
            let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
            idx.shuffle(rng);
            let k = (fraction * idx.len() as f64).round() as usize;
            if k == 0 || k >= idx.len() {
                return ((0..y.len()).collect(), Vec::new());
            }
            val.extend_from_slice(&idx[..k]);
            train.extend_from_slice(&idx[k..]);
        }
    } else {
        train = (0..y.len()).collect();
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_clusters() {
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|i| {
                let s = if i % 2 == 0 { -1.0 } else { 1.0 };
                vec![s + 0.1 * ((i as f64) * 0.7).sin(), s * 0.5 + 0.1 * ((i as f64) * 1.3).cos()]
            })
            .collect();
        let y: Vec<u8> = (0..80).map(|i| u8::from(i % 2 == 1)).collect();
        let x = FeatureMatrix::from_unnamed_rows(rows);
        let params = ClassifierParams { mlp_learning_rate: 0.01, ..Default::default() };
        let m = Mlp::fit(&x, &y, &params, 5);
        let p = m.predict_proba(&x);
        let correct = p.iter().zip(&y).filter(|(p, &t)| u8::from(**p > 0.5) == t).count();
        assert_eq!(correct, 80);
        let again = Mlp::fit(&x, &y, &params, 5).predict_proba(&x);
        assert_eq!(p, again);
    }

    #[test]
    fn split_is_stratified() {
        let y: Vec<u8> = (0..50).map(|i| u8::from(i < 20)).collect();
        let (train, val) = validation_split(&y, 0.1, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(val.len(), 5);
        assert_eq!(val.iter().filter(|&&i| y[i] == 1).count(), 2);
        assert_eq!(train.len() + val.len(), 50);
    }
}
