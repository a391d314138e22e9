//! Count matrices shared by the texture families.

use serde::Serialize;

use super::Family;

/// Dense `rows × cols` count matrix. Row `i` is gray level `i + 1`; column
/// `j` is the family's second index (neighbour level, run length, zone size,
/// distance or dependence), also one-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrayLevelMatrix {
    pub family: Family,
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<f64>,
}

impl GrayLevelMatrix {
    pub fn zeros(family: Family, rows: usize, cols: usize) -> Self {
        Self { family, rows, cols, counts: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.counts[i * self.cols + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.counts[i * self.cols + j] += v;
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Counts divided by their total; all zeros when the matrix is empty.
    pub fn probabilities(&self) -> Vec<f64> {
        let t = self.total();
        if t > 0.0 {
            self.counts.iter().map(|c| c / t).collect()
        } else {
            vec![0.0; self.counts.len()]
        }
    }

    /// Element-wise sum of same-shaped matrices.
    pub fn merged(ms: &[GrayLevelMatrix]) -> Self {
        let mut out = Self::zeros(ms[0].family, ms[0].rows, ms[0].cols);
        for m in ms {
            for (o, c) in out.counts.iter_mut().zip(&m.counts) {
                *o += c;
            }
        }
        out
    }

    /// Copy widened to `cols` columns (extra columns are zero).
    pub fn widened(&self, cols: usize) -> Self {
        let mut out = Self::zeros(self.family, self.rows, cols.max(self.cols));
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.add(i, j, self.get(i, j));
            }
        }
        out
    }
}

pub(crate) fn entropy(p: impl IntoIterator<Item = f64>) -> f64 {
    -p.into_iter().filter(|&v| v > 0.0).map(|v| v * v.log2()).sum::<f64>()
}

/// Emphasis, non-uniformity, variance and entropy features of a level ×
/// size style matrix (runs, zones, distances or dependences). `percentage`
/// is the element count over `percentage_denominator`. An empty matrix
/// yields NaN everywhere for the caller's degenerate-value policy.
pub(crate) fn size_features(m: &GrayLevelMatrix, percentage_denominator: f64) -> [f64; 16] {
    let ns = m.total();
    if ns <= 0.0 {
        return [f64::NAN; 16];
    }
    let mut out = [0.0; 16];
    let mut row_sums = vec![0.0; m.rows];
    let mut col_sums = vec![0.0; m.cols];
    let (mut mu_i, mut mu_j) = (0.0, 0.0);
    for i in 0..m.rows {
        let gi = (i + 1) as f64;
        for j in 0..m.cols {
            let r = m.get(i, j);
            if r == 0.0 {
                continue;
            }
            let sj = (j + 1) as f64;
            let (i2, j2) = (gi * gi, sj * sj);
            out[0] += r / j2;
            out[1] += r * j2;
            out[2] += r / i2;
            out[3] += r * i2;
            out[4] += r / (i2 * j2);
            out[5] += r * i2 / j2;
            out[6] += r * j2 / i2;
            out[7] += r * i2 * j2;
            row_sums[i] += r;
            col_sums[j] += r;
            let p = r / ns;
            mu_i += gi * p;
            mu_j += sj * p;
            out[15] -= p * p.log2();
        }
    }
    for v in out.iter_mut().take(8) {
        *v /= ns;
    }
    let gl_nu: f64 = row_sums.iter().map(|s| s * s).sum();
    let size_nu: f64 = col_sums.iter().map(|s| s * s).sum();
    out[8] = gl_nu / ns;
    out[9] = gl_nu / (ns * ns);
    out[10] = size_nu / ns;
    out[11] = size_nu / (ns * ns);
    out[12] = ns / percentage_denominator;
    out[13] = row_sums.iter().enumerate().map(|(i, s)| ((i + 1) as f64 - mu_i).powi(2) * s / ns).sum();
    out[14] = col_sums.iter().enumerate().map(|(j, s)| ((j + 1) as f64 - mu_j).powi(2) * s / ns).sum();
    out
}
