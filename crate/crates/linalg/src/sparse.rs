use crate::{DenseMatrix, LinalgError, Result};

/// Compressed sparse column matrix.
///
/// Row indices are strictly increasing within each column and stored values
/// are nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseColMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseColMatrix {
    /// Assembles from `(row, col, value)` triplets. Zero values are dropped;
    /// duplicate positions are rejected.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (k, &(r, c, v)) in triplets.iter().enumerate() {
            if r >= rows || c >= cols {
                return Err(LinalgError::Sparse(format!("entry ({r}, {c}) outside {rows}x{cols}")));
            }
            if !v.is_finite() {
                return Err(LinalgError::NonFinite(k));
            }
            if v != 0.0 {
                t.push((r, c, v));
            }
        }
        t.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(t.len());
        let mut values = Vec::with_capacity(t.len());
        for (k, &(r, c, v)) in t.iter().enumerate() {
            if k > 0 && t[k - 1].0 == r && t[k - 1].1 == c {
                return Err(LinalgError::Sparse(format!("duplicate entry ({r}, {c})")));
            }
            col_ptr[c + 1] += 1;
            row_idx.push(r);
            values.push(v);
        }
        for c in 0..cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(Self { rows, cols, col_ptr, row_idx, values })
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut col_ptr = Vec::with_capacity(m.cols() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for j in 0..m.cols() {
            for i in 0..m.rows() {
                let v = m.get(i, j);
                if v != 0.0 {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self { rows: m.rows(), cols: m.cols(), col_ptr, row_idx, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.col(j);
        idx.binary_search(&i).map_or(0.0, |k| val[k])
    }

    /// Triplets in column-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for j in 0..self.cols {
            let (idx, val) = self.col(j);
            out.extend(idx.iter().zip(val).map(|(&i, &v)| (i, j, v)));
        }
        out
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            d.set(i, j, v);
        }
        d
    }
}
