//! Friedman rank test for raters × treatments rating matrices.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::descriptive::{average_ranks, is_constant, tie_sizes};
use super::StatsError;

/// Exact permutation p is computed when raters · k! stays at or below this.
pub const EXACT_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FriedmanResult {
    pub n_raters: usize,
    pub n_treatments: usize,
    /// Tie-corrected statistic.
    pub chi2: f64,
    pub df: usize,
    /// χ² approximation.
    pub p: f64,
    pub exact_p: Option<f64>,
}

impl FriedmanResult {
    /// What a matrix without any within-rater variation reports.
    pub fn degenerate(n_raters: usize, n_treatments: usize) -> Self {
        Self { n_raters, n_treatments, chi2: 0.0, df: n_treatments - 1, p: 1.0, exact_p: Some(1.0) }
    }
}

/// `ratings[i][j]` is rater i's score for treatment j. Ranks are taken within
/// each rater with ties averaged.
pub fn friedman(ratings: &[Vec<f64>]) -> Result<FriedmanResult, StatsError> {
    let n = ratings.len();
    let k = ratings.first().map_or(0, Vec::len);
    if n < 2 || k < 2 || ratings.iter().any(|r| r.len() != k) {
        return Err(StatsError::BadRatingsShape(n, k));
    }
    if ratings.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if ratings.iter().all(|r| is_constant(r)) {
        return Err(StatsError::DegenerateRanks);
    }
    let ranked: Vec<Vec<f64>> = ratings.iter().map(|r| average_ranks(r)).collect();
    let mut sums = vec![0.0; k];
    for r in &ranked {
        for (s, v) in sums.iter_mut().zip(r) {
            *s += v;
        }
    }
    let chi2 = statistic(&sums, n, &tie_correction(ratings, k));
    let df = k - 1;
    let p = ChiSquared::new(df as f64).expect("df ≥ 1").sf(chi2).clamp(0.0, 1.0);

    let exact_p = factorial(k).and_then(|f| f.checked_mul(n)).filter(|&work| work <= EXACT_BUDGET).map(|_| exact_p(&ranked, &sums));
    Ok(FriedmanResult { n_raters: n, n_treatments: k, chi2, df, p, exact_p })
}

fn tie_correction(ratings: &[Vec<f64>], k: usize) -> f64 {
    let n = ratings.len();
    let ties: f64 = ratings.iter().flat_map(|r| tie_sizes(r)).map(|t| (t * t * t - t) as f64).sum();
    1.0 - ties / (n * (k * k * k - k)) as f64
}

fn statistic(sums: &[f64], n: usize, correction: &f64) -> f64 {
    let k = sums.len() as f64;
    let n = n as f64;
    let centre = n * (k + 1.0) / 2.0;
    let ss: f64 = sums.iter().map(|r| (r - centre).powi(2)).sum();
    (12.0 / (n * k * (k + 1.0)) * ss / correction).max(0.0)
}

fn factorial(k: usize) -> Option<usize> {
    (1..=k).try_fold(1usize, |acc, v| acc.checked_mul(v))
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..k).collect();
    fn recurse(i: usize, perm: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == perm.len() {
            out.push(perm.clone());
            return;
        }
        for j in i..perm.len() {
            perm.swap(i, j);
            recurse(i + 1, perm, out);
            perm.swap(i, j);
        }
    }
    recurse(0, &mut perm, &mut out);
    out
}

/// P(Σ R_j² ≥ observed) when each rater's ranks are independently and
/// uniformly permuted across treatments. Column sums are kept sorted: the
/// statistic and every later step are symmetric in treatment order, which
/// collapses the state space to multisets of doubled rank sums.
fn exact_p(ranked: &[Vec<f64>], sums: &[f64]) -> f64 {
    let k = sums.len();
    let perms = permutations(k);
    let observed: u64 = sums.iter().map(|s| ((2.0 * s).round() as u64).pow(2)).sum();
    let mut states: BTreeMap<Vec<u32>, f64> = BTreeMap::from([(vec![0u32; k], 1.0)]);
    for ranks in ranked {
        let doubled: Vec<u32> = ranks.iter().map(|r| (2.0 * r).round() as u32).collect();
        let mut moves: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for p in &perms {
            *moves.entry(p.iter().map(|&i| doubled[i]).collect()).or_default() += 1.0;
        }
        let total = perms.len() as f64;
        let mut next: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (state, prob) in &states {
            for (mv, count) in &moves {
                let mut s: Vec<u32> = state.iter().zip(mv).map(|(a, b)| a + b).collect();
                s.sort_unstable();
                *next.entry(s).or_default() += prob * count / total;
            }
        }
        states = next;
    }
    let p: f64 = states.iter().filter(|(s, _)| s.iter().map(|&v| (v as u64).pow(2)).sum::<u64>() >= observed).map(|(_, prob)| prob).sum();
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agreeing_rankings() {
        let r = friedman(&vec![vec![1.0, 2.0, 3.0]; 3]).unwrap();
        assert!((r.chi2 - 6.0).abs() < 1e-12);
        assert_eq!(r.df, 2);
        // Every rater must pick the same ordering: 6 / 6³.
        assert!((r.exact_p.unwrap() - 6.0 / 216.0).abs() < 1e-12);
    }

    #[test]
    fn identical_ratings_are_degenerate() {
        assert_eq!(friedman(&vec![vec![4.0; 5]; 6]), Err(StatsError::DegenerateRanks));
        let d = FriedmanResult::degenerate(6, 5);
        assert_eq!((d.chi2, d.p), (0.0, 1.0));
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(friedman(&[vec![1.0, 2.0]]), Err(StatsError::BadRatingsShape(1, 2))));
        assert!(friedman(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn exact_p_sums_to_one_at_zero_threshold() {
        let ranked = vec![vec![1.0, 2.0, 3.0]; 2];
        assert!((exact_p(&ranked, &[4.0, 4.0, 4.0]) - 1.0).abs() < 1e-12);
    }
}
