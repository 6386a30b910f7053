use crate::{DenseMatrix, LinalgError, Result, SparseColMatrix};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// A linear map `ℝⁿ → ℝᵐ` with its adjoint.
pub trait LinOp {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `y = M x`; slices have the right lengths.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);
    /// `x = Mᵀ y`.
    fn apply_t_into(&self, y: &[f64], x: &mut [f64]);
    /// Squared norm of column `j`.
    fn col_norm_sq(&self, j: usize) -> f64;
}

impl LinOp for DenseMatrix {
    fn rows(&self) -> usize {
        DenseMatrix::rows(self)
    }
    fn cols(&self) -> usize {
        DenseMatrix::cols(self)
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }
    fn apply_t_into(&self, y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                for (xj, &a) in x.iter_mut().zip(self.row(i)) {
                    *xj += a * yi;
                }
            }
        }
    }
    fn col_norm_sq(&self, j: usize) -> f64 {
        (0..DenseMatrix::rows(self)).map(|i| self.get(i, j).powi(2)).sum()
    }
}

impl LinOp for SparseColMatrix {
    fn rows(&self) -> usize {
        SparseColMatrix::rows(self)
    }
    fn cols(&self) -> usize {
        SparseColMatrix::cols(self)
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                let (idx, val) = self.col(j);
                for (&i, &a) in idx.iter().zip(val) {
                    y[i] += a * xj;
                }
            }
        }
    }
    fn apply_t_into(&self, y: &[f64], x: &mut [f64]) {
        for (j, xj) in x.iter_mut().enumerate() {
            let (idx, val) = self.col(j);
            *xj = idx.iter().zip(val).map(|(&i, &a)| a * y[i]).sum();
        }
    }
    fn col_norm_sq(&self, j: usize) -> f64 {
        self.col(j).1.iter().map(|v| v * v).sum()
    }
}

/// Either storage, as read from disk or produced by the generators.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Dense(DenseMatrix),
    Sparse(SparseColMatrix),
}

impl Matrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Matrix::Dense(m) => m.get(i, j),
            Matrix::Sparse(m) => m.get(i, j),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Matrix::Dense(m) => m.clone(),
            Matrix::Sparse(m) => m.to_dense(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            Matrix::Dense(m) => norm(m.data()),
            Matrix::Sparse(m) => norm(&m.triplets().iter().map(|t| t.2).collect::<Vec<_>>()),
        }
    }

    pub fn scale(&mut self, s: f64) {
        match self {
            Matrix::Dense(m) => m.scale(s),
            Matrix::Sparse(m) => m.values_mut().iter_mut().for_each(|v| *v *= s),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Matrix::Sparse(_))
    }
}

impl From<DenseMatrix> for Matrix {
    fn from(m: DenseMatrix) -> Self {
        Matrix::Dense(m)
    }
}

impl From<SparseColMatrix> for Matrix {
    fn from(m: SparseColMatrix) -> Self {
        Matrix::Sparse(m)
    }
}

impl LinOp for Matrix {
    fn rows(&self) -> usize {
        match self {
            Matrix::Dense(m) => DenseMatrix::rows(m),
            Matrix::Sparse(m) => SparseColMatrix::rows(m),
        }
    }
    fn cols(&self) -> usize {
        match self {
            Matrix::Dense(m) => DenseMatrix::cols(m),
            Matrix::Sparse(m) => SparseColMatrix::cols(m),
        }
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Matrix::Dense(m) => m.apply_into(x, y),
            Matrix::Sparse(m) => m.apply_into(x, y),
        }
    }
    fn apply_t_into(&self, y: &[f64], x: &mut [f64]) {
        match self {
            Matrix::Dense(m) => m.apply_t_into(y, x),
            Matrix::Sparse(m) => m.apply_t_into(y, x),
        }
    }
    fn col_norm_sq(&self, j: usize) -> f64 {
        match self {
            Matrix::Dense(m) => m.col_norm_sq(j),
            Matrix::Sparse(m) => m.col_norm_sq(j),
        }
    }
}

/// Column-major copy of a matrix, so that `A·e_j` is a contiguous read.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMatrix {
    rows: usize,
    cols: usize,
    store: Store,
}

#[derive(Debug, Clone, PartialEq)]
enum Store {
    Dense(Vec<f64>),
    Sparse(SparseColMatrix),
}

/// One column of a [`ColumnMatrix`].
#[derive(Debug, Clone, Copy)]
pub enum Column<'a> {
    Dense(&'a [f64]),
    Sparse(&'a [usize], &'a [f64]),
}

impl Column<'_> {
    #[inline]
    pub fn dot(&self, v: &[f64]) -> f64 {
        match *self {
            Column::Dense(c) => dot(c, v),
            Column::Sparse(idx, val) => idx.iter().zip(val).map(|(&i, &a)| a * v[i]).sum(),
        }
    }

    /// `v += alpha · column`.
    #[inline]
    pub fn axpy(&self, alpha: f64, v: &mut [f64]) {
        match *self {
            Column::Dense(c) => v.iter_mut().zip(c).for_each(|(vi, &a)| *vi += alpha * a),
            Column::Sparse(idx, val) => {
                for (&i, &a) in idx.iter().zip(val) {
                    v[i] += alpha * a;
                }
            }
        }
    }

    /// Calls `f(row, value)` for every stored entry.
    #[inline]
    pub fn for_each(&self, mut f: impl FnMut(usize, f64)) {
        match *self {
            Column::Dense(c) => c.iter().enumerate().for_each(|(i, &a)| f(i, a)),
            Column::Sparse(idx, val) => idx.iter().zip(val).for_each(|(&i, &a)| f(i, a)),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match *self {
            Column::Dense(c) => norm_sq(c),
            Column::Sparse(_, val) => norm_sq(val),
        }
    }
}

impl ColumnMatrix {
    pub fn col(&self, j: usize) -> Column<'_> {
        match &self.store {
            Store::Dense(d) => Column::Dense(&d[j * self.rows..(j + 1) * self.rows]),
            Store::Sparse(s) => {
                let (i, v) = s.col(j);
                Column::Sparse(i, v)
            }
        }
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.store {
            Store::Dense(d) => d[j * self.rows + i],
            Store::Sparse(s) => s.get(i, j),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        match &self.store {
            Store::Dense(d) => {
                let t = DenseMatrix::new(self.cols, self.rows, d.clone()).expect("finite");
                Matrix::Dense(t.transpose())
            }
            Store::Sparse(s) => Matrix::Sparse(s.clone()),
        }
    }

    /// Returns a copy with every row `j` multiplied by `w[j]` (that is, `diag(w)·A`).
    pub fn scale_rows(&self, w: &[f64]) -> Self {
        let store = match &self.store {
            Store::Dense(d) => {
                let mut d = d.clone();
                for col in d.chunks_mut(self.rows.max(1)) {
                    col.iter_mut().zip(w).for_each(|(a, &s)| *a *= s);
                }
                Store::Dense(d)
            }
            Store::Sparse(s) => {
                let t: Vec<_> = s.triplets().into_iter().map(|(i, j, v)| (i, j, v * w[i])).collect();
                Store::Sparse(SparseColMatrix::from_triplets(self.rows, self.cols, &t).expect("valid"))
            }
        };
        Self { rows: self.rows, cols: self.cols, store }
    }
}

impl From<&Matrix> for ColumnMatrix {
    fn from(m: &Matrix) -> Self {
        match m {
            Matrix::Dense(d) => d.into(),
            Matrix::Sparse(s) => ColumnMatrix { rows: s.rows(), cols: s.cols(), store: Store::Sparse(s.clone()) },
        }
    }
}

impl From<&DenseMatrix> for ColumnMatrix {
    fn from(d: &DenseMatrix) -> Self {
        ColumnMatrix { rows: d.rows(), cols: d.cols(), store: Store::Dense(d.transpose().into_data()) }
    }
}

impl LinOp for ColumnMatrix {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                self.col(j).axpy(xj, y);
            }
        }
    }
    fn apply_t_into(&self, y: &[f64], x: &mut [f64]) {
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = self.col(j).dot(y);
        }
    }
    fn col_norm_sq(&self, j: usize) -> f64 {
        self.col(j).norm_sq()
    }
}

/// `M v`, checking dimensions.
pub fn matvec<M: LinOp + ?Sized>(m: &M, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != m.cols() {
        return Err(LinalgError::Dimension { expected: m.cols(), got: v.len() });
    }
    let mut y = vec![0.0; m.rows()];
    m.apply_into(v, &mut y);
    Ok(y)
}

/// `Mᵀ v`, checking dimensions.
pub fn matvec_t<M: LinOp + ?Sized>(m: &M, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != m.rows() {
        return Err(LinalgError::Dimension { expected: m.rows(), got: v.len() });
    }
    let mut x = vec![0.0; m.cols()];
    m.apply_t_into(v, &mut x);
    Ok(x)
}

/// Squared column norms, i.e. `diag(GᵀG)`.
pub fn gram_diagonal<M: LinOp + ?Sized>(m: &M) -> Vec<f64> {
    (0..m.cols()).map(|j| m.col_norm_sq(j)).collect()
}

/// Power iteration for the largest eigenvalue of `GᵀG`.
///
/// Stops once successive Rayleigh quotients agree to relative `tol`, or after
/// `max_iter` products. The returned value is the last Rayleigh quotient, so
/// it can sit slightly below the true value; callers that need a valid
/// Lipschitz bound inflate it.
pub fn spectral_norm_sq<M: LinOp + ?Sized>(m: &M, tol: f64, max_iter: usize) -> f64 {
    let n = m.cols();
    if n == 0 || m.rows() == 0 {
        return 0.0;
    }
    // deterministic start with no special alignment
    let mut v: Vec<f64> = (0..n).map(|j| 1.0 + ((j as f64 + 1.0) * 0.618_033_988_749_895).fract()).collect();
    let s = norm(&v);
    v.iter_mut().for_each(|x| *x /= s);
    let mut u = vec![0.0; m.rows()];
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..max_iter.max(1) {
        m.apply_into(&v, &mut u);
        m.apply_t_into(&u, &mut w);
        let rq = norm_sq(&u);
        let wn = norm(&w);
        if wn == 0.0 {
            return 0.0;
        }
        for (vi, &wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
        let done = (rq - lambda).abs() <= tol * rq;
        lambda = rq;
        if done {
            break;
        }
    }
    m.apply_into(&v, &mut u);
    norm_sq(&u).max(lambda)
}
