use serde::Serialize;

use crate::features::FeatureMatrix;

/// Uniform-vote k nearest neighbours under Euclidean distance; equal
/// distances are broken by training order.
#[derive(Debug, Clone, Serialize)]
pub struct Knn {
    pub k: usize,
    #[serde(skip)]
    train: FeatureMatrix,
    #[serde(skip)]
    labels: Vec<u8>,
}

impl Knn {
    pub fn fit(x: &FeatureMatrix, y: &[u8], k: usize) -> Self {
        Self { k: k.min(x.n_rows()), train: x.clone(), labels: y.to_vec() }
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        x.rows()
            .map(|r| {
                let mut d: Vec<(f64, usize)> =
                    self.train.rows().enumerate().map(|(i, t)| (t.iter().zip(r).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i)).collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let votes: usize = d[..self.k].iter().map(|&(_, i)| usize::from(self.labels[i])).sum();
                votes as f64 / self.k as f64
            })
            .collect()
    }
}
