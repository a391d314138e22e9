use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::FeatureMatrix;

/// Two-class ReliefF with Manhattan distance on range-normalized features.
/// Uses every row as a probe when there are at most `samples` rows,
/// otherwise a seeded sample without replacement.
pub fn relieff(x: &FeatureMatrix, y: &[u8], neighbors: usize, samples: usize, seed: u64) -> Vec<f64> {
    let n = x.n_rows();
    let p = x.n_cols();
    let mut range = vec![0.0; p];
    for (j, r) in range.iter_mut().enumerate() {
        let col = x.column(j);
        let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        *r = hi - lo;
    }
    let diff = |a: usize, b: usize, j: usize| if range[j] > 0.0 { (x.get(a, j) - x.get(b, j)).abs() / range[j] } else { 0.0 };
    let dist = |a: usize, b: usize| (0..p).map(|j| diff(a, b, j)).sum::<f64>();

    let probes: Vec<usize> = if n <= samples {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = rand::seq::index::sample(&mut rng, n, samples).into_vec();
        s.sort_unstable();
        s
    };
    let m = probes.len() as f64;
    let mut w = vec![0.0; p];
    for &r in &probes {
        let mut hits = Vec::new();
        let mut misses = Vec::new();
        for i in (0..n).filter(|&i| i != r) {
            let entry = (dist(r, i), i);
            if y[i] == y[r] {
                hits.push(entry)
            } else {
                misses.push(entry)
            }
        }
        for (group, sign) in [(&mut hits, -1.0), (&mut misses, 1.0)] {
            group.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let k = neighbors.min(group.len());
            for &(_, i) in group.iter().take(k) {
                for (j, wj) in w.iter_mut().enumerate() {
                    *wj += sign * diff(r, i, j) / (m * k as f64);
                }
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relevant_feature_outscores_noise() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 2) as f64 + 0.01 * i as f64, ((i * 13) % 7) as f64]).collect();
        let y: Vec<u8> = (0..30).map(|i| (i % 2) as u8).collect();
        let w = relieff(&FeatureMatrix::from_unnamed_rows(rows), &y, 10, 100, 0);
        assert!(w[0] > 0.5 && w[1] < 0.1, "{w:?}");
    }

    #[test]
    fn seeded_subsample_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..150).map(|i| vec![(i as f64 * 0.3).sin(), (i % 3) as f64]).collect();
        let y: Vec<u8> = (0..150).map(|i| u8::from(i % 3 == 0)).collect();
        let x = FeatureMatrix::from_unnamed_rows(rows);
        assert_eq!(relieff(&x, &y, 10, 100, 9), relieff(&x, &y, 10, 100, 9));
    }
}
