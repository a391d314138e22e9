use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Fold assignment per row of the labeled set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvSplit {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<usize>,
}

impl CvSplit {
    /// (training rows, held-out rows) for fold `f`, both ascending.
    pub fn fold_indices(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.folds.len()).partition(|&i| self.folds[i] != f)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Each class is shuffled (class 0 on RNG stream 0, class 1 on stream 1)
/// and dealt round-robin; the dealer position carries over from class 0 to
/// class 1 so fold sizes differ by at most one.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<CvSplit, ModelError> {
    if labels.iter().any(|&v| v > 1) {
        return Err(ModelError::NonBinaryLabel);
    }
    for class in 0..2u8 {
        let got = labels.iter().filter(|&&v| v == class).count();
        if got < k {
            return Err(ModelError::TooFewPerClass { class, got, needed: k });
        }
    }
    let mut folds = vec![0; labels.len()];
    let mut dealt = 0;
    for class in 0..2u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(class));
        idx.shuffle(&mut rng);
        for i in idx {
            folds[i] = dealt % k;
            dealt += 1;
        }
    }
    Ok(CvSplit { k, seed, folds })
}
