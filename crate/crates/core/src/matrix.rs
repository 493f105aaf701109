//! Dense row-major feature matrices.

use crate::error::{Error, Result};

/// A row-major matrix of sample feature vectors, one sample per row.
///
/// Every value is finite and the matrix has at least one row and one column.
/// Rows may optionally carry opaque identifiers (e.g. file names).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    ids: Option<Vec<String>>,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major values, checking shape and finiteness.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty(format!("shape ({rows}, {cols})")));
        }
        if values.len() != rows * cols {
            return Err(Error::dims("value count for shape", rows * cols, values.len()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
                value: values[pos],
            });
        }
        Ok(Self {
            rows,
            cols,
            values,
            ids: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(n * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: cols,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(n, cols, values)
    }

    /// Attaches per-row identifiers.
    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.rows {
            return Err(Error::dims("row identifier count", self.rows, ids.len()));
        }
        self.ids = Some(ids);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    /// Identifier of row `i`: the attached id if any, otherwise the row index.
    pub fn row_id(&self, i: usize) -> String {
        match &self.ids {
            Some(ids) => ids[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Copies column `j` out into a vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[j]).collect()
    }

    /// Returns the sub-matrix made of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::dims("row index out of range", self.rows, i));
            }
            values.extend_from_slice(self.row(i));
        }
        let mut out = Self::new(indices.len(), self.cols, values)?;
        if let Some(ids) = &self.ids {
            out.ids = Some(indices.iter().map(|&i| ids[i].clone()).collect());
        }
        Ok(out)
    }
}
