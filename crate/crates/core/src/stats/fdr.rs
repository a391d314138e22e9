//! Benjamini–Hochberg step-up procedure.

use super::StatsError;

/// Rejection flags at false-discovery rate `q`: reject every hypothesis whose
/// rank is at most `max{i : p(i) ≤ i·q/m}`.
pub fn bh_fdr(pvals: &[f64], q: f64) -> Result<Vec<bool>, StatsError> {
    if let Some(&bad) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::InvalidPValue(bad));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]).then(a.cmp(&b)));
    let cutoff = order
        .iter()
        .enumerate()
        .filter(|(rank, &i)| pvals[i] <= (rank + 1) as f64 * q / m as f64)
        .map(|(rank, _)| rank + 1)
        .max()
        .unwrap_or(0);
    let mut reject = vec![false; m];
    for &i in &order[..cutoff] {
        reject[i] = true;
    }
    Ok(reject)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures() {
        assert_eq!(bh_fdr(&[0.01, 0.02, 0.03, 0.04], 0.05).unwrap(), vec![true; 4]);
        assert_eq!(bh_fdr(&[0.03, 0.2, 0.4], 0.05).unwrap(), vec![false; 3]);
        assert_eq!(bh_fdr(&[1.0; 5], 0.05).unwrap(), vec![false; 5]);
        // Step-up: p(2) fails its own threshold but p(3) passes, so all three go.
        assert_eq!(bh_fdr(&[0.01, 0.04, 0.045], 0.05).unwrap(), vec![true; 3]);
        assert!(bh_fdr(&[1.5], 0.05).is_err());
        assert!(bh_fdr(&[], 0.05).unwrap().is_empty());
    }
}
