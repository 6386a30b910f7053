//! Difference-of-convex minimization `F(x) = f(x) + h(x) − g(x)` by
//! coordinate descent with exact one-dimensional subproblem solves.
//!
//! [`prox`] holds the breakpoint operators, [`problem`] the problem model and
//! application builders, [`solvers`] coordinate descent and the baselines, and
//! [`optimality`] the stationarity residuals and worked examples.

pub mod optimality;
pub mod problem;
pub mod prox;
pub mod solvers;

pub use problem::{DcProblem, NormOrder};
pub use solvers::{SolverConfig, Trace};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] dccd_linalg::LinalgError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("subproblem is not coercive: a = 0 with an unbounded feasible interval")]
    NonCoercive,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
