//! Synthetic benchmark data and the experiment runner for the dccd solvers.
//!
//! Random streams come from `ChaCha8Rng` seeded with `seed_from_u64`, one
//! stream per purpose (matrix, signal, start point), so outputs are portable
//! across platforms.

pub mod data;
pub mod runner;

pub use data::{
    build_instance, build_problem, gen_matrix, gen_signal_and_obs, initial_point, AppParams, Application, DataKind,
    DatasetSpec, Instance,
};
pub use runner::{desk_datasets, execute, run_experiment, run_solver, ExperimentSpec, Report, ReportRow, SolverKind};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] dccd::Error),
    #[error(transparent)]
    Linalg(#[from] dccd_linalg::LinalgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;
