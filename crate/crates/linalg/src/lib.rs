//! Small linear algebra for the dccd solvers.
//!
//! Dense row-major and compressed-column sparse matrices, a column-major
//! view used by coordinate updates, power iteration for `‖G‖₂²`, a cyclic
//! Jacobi eigensolver, and real polynomial roots up to degree four.

mod dense;
mod eig;
mod io;
mod ops;
mod roots;
mod sparse;

pub use dense::DenseMatrix;
pub use eig::{sym_eig, SymEig};
pub use io::{read_matrix, read_vector, write_matrix, write_vector};
pub use ops::{
    dot, gram_diagonal, matvec, matvec_t, norm, norm_sq, spectral_norm_sq, Column, ColumnMatrix, LinOp, Matrix,
};
pub use roots::{cardano_k, poly_eval, polynomial_roots, real_root_candidates, real_roots};
pub use sparse::SparseColMatrix;

/// Errors raised by linear algebra routines.
#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("non-finite entry at position {0}")]
    NonFinite(usize),
    #[error("invalid sparse structure: {0}")]
    Sparse(String),
    #[error("argument out of range: {0}")]
    Domain(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LinalgError>;
