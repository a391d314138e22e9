//! Case × feature table shared by radiomics, statistics and modelling.

use std::collections::HashMap;
use std::io::{Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureMatrixError {
    #[error("row {row} has {got} values, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("duplicate case id `{0}`")]
    DuplicateCase(String),
    #[error("malformed feature CSV: {0}")]
    Csv(String),
    #[error("non-finite value for case `{case}` feature `{feature}`")]
    NonFinite { case: String, feature: String },
}

impl From<csv::Error> for FeatureMatrixError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e.to_string())
    }
}

/// Row-major matrix; rows are cases, columns are feature ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub case_ids: Vec<String>,
    pub feature_ids: Vec<String>,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(case_ids: Vec<String>, feature_ids: Vec<String>, data: Vec<f64>) -> Result<Self, FeatureMatrixError> {
        let cols = feature_ids.len();
        if data.len() != case_ids.len() * cols {
            return Err(FeatureMatrixError::RaggedRow { row: data.len() / cols.max(1), got: data.len() % cols.max(1), expected: cols });
        }
        Ok(Self { case_ids, feature_ids, data })
    }

    pub fn from_rows(case_ids: Vec<String>, feature_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, FeatureMatrixError> {
        let cols = feature_ids.len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(FeatureMatrixError::RaggedRow { row: i, got: r.len(), expected: cols });
            }
            data.extend_from_slice(r);
        }
        Self::new(case_ids, feature_ids, data)
    }

    /// Anonymous ids `r0..` / `f0..`; handy for tests and intermediate data.
    pub fn from_unnamed_rows(rows: Vec<Vec<f64>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let case_ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let feature_ids = (0..cols).map(|j| format!("f{j}")).collect();
        Self::from_rows(case_ids, feature_ids, rows).expect("rectangular rows")
    }

    pub fn n_rows(&self) -> usize {
        self.case_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols() + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        let c = self.n_cols();
        self.data[row * c + col] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.n_cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn column_index(&self, feature_id: &str) -> Option<usize> {
        self.feature_ids.iter().position(|f| f == feature_id)
    }

    pub fn row_index(&self, case_id: &str) -> Option<usize> {
        self.case_ids.iter().position(|c| c == case_id)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols());
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self { case_ids: rows.iter().map(|&r| self.case_ids[r].clone()).collect(), feature_ids: self.feature_ids.clone(), data }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.n_rows() * cols.len());
        for i in 0..self.n_rows() {
            let row = self.row(i);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Self { case_ids: self.case_ids.clone(), feature_ids: cols.iter().map(|&c| self.feature_ids[c].clone()).collect(), data }
    }

    /// Stacks rows of `other` (same feature ids) below `self`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.feature_ids, other.feature_ids, "vstack needs identical columns");
        let mut out = self.clone();
        out.case_ids.extend(other.case_ids.iter().cloned());
        out.data.extend_from_slice(&other.data);
        out
    }

    /// Row indices into `self` and `other` for the case ids both contain,
    /// in `self`'s order.
    pub fn aligned_rows(&self, other: &Self) -> Vec<(usize, usize)> {
        let lookup: HashMap<&str, usize> = other.case_ids.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        self.case_ids.iter().enumerate().filter_map(|(i, c)| lookup.get(c.as_str()).map(|&j| (i, j))).collect()
    }

    pub fn check_finite(&self) -> Result<(), FeatureMatrixError> {
        if let Some(k) = self.data.iter().position(|v| !v.is_finite()) {
            let c = self.n_cols();
            return Err(FeatureMatrixError::NonFinite { case: self.case_ids[k / c].clone(), feature: self.feature_ids[k % c].clone() });
        }
        Ok(())
    }

    /// CSV: `case_id` then one column per feature id.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), FeatureMatrixError> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["case_id".to_string()];
        header.extend(self.feature_ids.iter().cloned());
        wr.write_record(&header)?;
        for (i, case) in self.case_ids.iter().enumerate() {
            let mut rec = vec![case.clone()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush().map_err(|e| FeatureMatrixError::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, FeatureMatrixError> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.get(0) != Some("case_id") {
            return Err(FeatureMatrixError::Csv("first column must be case_id".into()));
        }
        let feature_ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut case_ids = Vec::new();
        let mut data = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            let id = rec.get(0).unwrap_or_default().to_string();
            if !seen.insert(id.clone()) {
                return Err(FeatureMatrixError::DuplicateCase(id));
            }
            if rec.len() != feature_ids.len() + 1 {
                return Err(FeatureMatrixError::RaggedRow { row, got: rec.len() - 1, expected: feature_ids.len() });
            }
            for field in rec.iter().skip(1) {
                data.push(field.parse::<f64>().map_err(|e| FeatureMatrixError::Csv(format!("row {row}: {e}")))?);
            }
            case_ids.push(id);
        }
        Self::new(case_ids, feature_ids, data)
    }
}
