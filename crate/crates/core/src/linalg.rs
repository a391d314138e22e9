//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
/// Each eigenvector's sign is fixed so its largest-magnitude entry is positive.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        let pivot = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(k, &col);
    }
    (values, vectors)
}

/// Sample covariance (n − 1 denominator) of row-major data `rows × cols`,
/// together with the column means.
pub fn covariance(data: &[f64], rows: usize, cols: usize) -> (Vec<f64>, DMatrix<f64>) {
    let mut means = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            means[c] += data[r * cols + c];
        }
    }
    means.iter_mut().for_each(|m| *m /= rows as f64);
    let mut cov = DMatrix::zeros(cols, cols);
    for r in 0..rows {
        let row = &data[r * cols..(r + 1) * cols];
        for i in 0..cols {
            let di = row[i] - means[i];
            for j in i..cols {
                cov[(i, j)] += di * (row[j] - means[j]);
            }
        }
    }
    let denom = (rows.max(2) - 1) as f64;
    for i in 0..cols {
        for j in i..cols {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (means, cov)
}

/// Solves `a x = b` for symmetric positive definite `a`.
pub fn solve_spd(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let chol = a.clone().cholesky()?;
    let x = chol.solve(&nalgebra::DVector::from_column_slice(b));
    Some(x.iter().copied().collect())
}
