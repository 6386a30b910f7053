//! Synthetic matrices, ground truth and observations.

use std::fmt;
use std::str::FromStr;

use dccd::problem::{build_approx_binary, build_approx_sparse, build_eig_lp, build_glr, build_pca};
use dccd::{DcProblem, NormOrder};
use dccd_linalg::{matvec, norm, DenseMatrix, LinOp, Matrix, SparseColMatrix};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

pub const SPARSE_DENSITY: f64 = 0.05;
/// Matrices sparser than this are stored column-compressed.
pub const SPARSE_STORAGE_THRESHOLD: f64 = 0.25;
pub const CONTAMINATION_FRACTION: f64 = 0.1;
pub const CONTAMINATION_SCALE: f64 = 100.0;
pub const MAX_SUPPORT: usize = 200;

// independent generator streams derived from one seed
const STREAM_MATRIX: u64 = 0;
const STREAM_SIGNAL: u64 = 1;
const STREAM_START: u64 = 2;

pub(crate) fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k);
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Randn,
    SparseSynth,
}

impl DataKind {
    pub fn name(&self) -> &'static str {
        match self {
            DataKind::Randn => "randn",
            DataKind::SparseSynth => "sparse_synth",
        }
    }
}

impl FromStr for DataKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "randn" => Ok(DataKind::Randn),
            "sparse_synth" | "sparse-synth" => Ok(DataKind::SparseSynth),
            _ => Err(format!("unknown dataset kind `{s}` (expected randn or sparse_synth)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub kind: DataKind,
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub contaminated: bool,
    #[serde(default)]
    pub seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(BenchError::Invalid(format!("dataset {} has an empty dimension", self.name())));
        }
        Ok(())
    }

    /// Report label, e.g. `randn-128-256-C`.
    pub fn name(&self) -> String {
        let c = if self.contaminated { "-C" } else { "" };
        format!("{}-{}-{}{c}", self.kind.name(), self.m, self.n)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

pub fn gen_matrix(spec: &DatasetSpec) -> Result<Matrix> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    let mut rng = stream(spec.seed, STREAM_MATRIX);
    let mut data: Vec<f64> = match spec.kind {
        DataKind::Randn => (0..m * n).map(|_| rng.sample(StandardNormal)).collect(),
        DataKind::SparseSynth => {
            let mag = LogNormal::new(0.0, 1.0).expect("valid lognormal");
            (0..m * n)
                .map(|_| {
                    if rng.random::<f64>() < SPARSE_DENSITY {
                        let v: f64 = mag.sample(&mut rng);
                        if rng.random::<bool>() {
                            v
                        } else {
                            -v
                        }
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    };
    if spec.contaminated {
        let k = (CONTAMINATION_FRACTION * (m * n) as f64).floor() as usize;
        for idx in index::sample(&mut rng, m * n, k) {
            data[idx] *= CONTAMINATION_SCALE;
        }
    }
    let nnz = data.iter().filter(|v| **v != 0.0).count();
    let dense = DenseMatrix::new(m, n, data)?;
    if (nnz as f64) < SPARSE_STORAGE_THRESHOLD * (m * n) as f64 {
        Ok(Matrix::Sparse(SparseColMatrix::from_dense(&dense)))
    } else {
        Ok(Matrix::Dense(dense))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Application {
    EigL1,
    Sparse,
    Binary,
    Glr,
    Pca,
}

impl Application {
    pub fn name(&self) -> &'static str {
        match self {
            Application::EigL1 => "eig_l1",
            Application::Sparse => "sparse",
            Application::Binary => "binary",
            Application::Glr => "glr",
            Application::Pca => "pca",
        }
    }

    /// Whether the problem is built from observations `y`.
    pub fn has_observations(&self) -> bool {
        matches!(self, Application::Sparse | Application::Binary | Application::Glr)
    }
}

impl fmt::Display for Application {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Application {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "eig_l1" => Ok(Application::EigL1),
            "sparse" => Ok(Application::Sparse),
            "binary" => Ok(Application::Binary),
            "glr" => Ok(Application::Glr),
            "pca" => Ok(Application::Pca),
            _ => Err(format!("unknown application `{s}` (expected eig_l1, sparse, binary, glr or pca)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppParams {
    /// Quadratic weight for `eig_l1` and `pca`.
    pub alpha: f64,
    pub rho_sparse: f64,
    pub rho_binary: f64,
    /// Noise level relative to `‖Gx_true‖`.
    pub noise: f64,
    /// Scale `G` to unit Frobenius norm before generating observations.
    pub normalize: bool,
}

impl Default for AppParams {
    fn default() -> Self {
        Self { alpha: 1.0, rho_sparse: 1.0, rho_binary: 5.0, noise: 0.1, normalize: true }
    }
}

pub fn support_size(n: usize) -> usize {
    MAX_SUPPORT.min(n / 2)
}

/// Ground truth and observations. Applications without observations get
/// empty vectors.
pub fn gen_signal_and_obs(app: Application, g: &Matrix, seed: u64, noise_factor: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !app.has_observations() {
        return Ok((Vec::new(), Vec::new()));
    }
    let n = g.cols();
    let mut rng = stream(seed, STREAM_SIGNAL);
    let mut x = vec![0.0; n];
    match app {
        Application::Sparse => {
            for i in index::sample(&mut rng, n, support_size(n)) {
                x[i] = rng.sample(StandardNormal);
            }
        }
        Application::Binary => {
            for v in x.iter_mut() {
                *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
            }
        }
        _ => {
            for v in x.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
        }
    }
    let mut y = matvec(g, &x)?;
    let scale = noise_factor * norm(&y);
    if scale != 0.0 {
        for v in y.iter_mut() {
            *v += scale * rng.sample::<f64, _>(StandardNormal);
        }
    }
    if matches!(app, Application::Binary | Application::Glr) {
        for v in y.iter_mut() {
            *v = v.max(0.0);
        }
    }
    Ok((x, y))
}

pub fn build_problem(app: Application, g: &Matrix, y: &[f64], params: &AppParams) -> Result<DcProblem> {
    let p = match app {
        Application::EigL1 => build_eig_lp(g, None, params.alpha, NormOrder::L1)?,
        Application::Sparse => build_approx_sparse(g, y, params.rho_sparse, support_size(g.cols()).max(1))?,
        Application::Binary => build_approx_binary(g, y, params.rho_binary)?,
        Application::Glr => build_glr(g, y)?,
        Application::Pca => build_pca(&g.to_dense().gram(), params.alpha)?,
    };
    Ok(p)
}

/// Random unit vector for the eigenvalue-type problems and GLR (where the
/// origin is a critical point of every method), the origin otherwise.
pub fn initial_point(app: Application, n: usize, seed: u64) -> Vec<f64> {
    match app {
        Application::EigL1 | Application::Pca | Application::Glr => {
            let mut rng = stream(seed, STREAM_START);
            let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let s = norm(&x);
            if s > 0.0 {
                x.iter_mut().for_each(|v| *v /= s);
            }
            x
        }
        _ => vec![0.0; n],
    }
}

/// Everything a solver run needs for one (dataset, seed) pair.
#[derive(Debug, Clone)]
pub struct Instance {
    pub g: Matrix,
    pub x_true: Vec<f64>,
    pub y: Vec<f64>,
    pub problem: DcProblem,
    pub x0: Vec<f64>,
}

pub fn build_instance(app: Application, dataset: &DatasetSpec, params: &AppParams) -> Result<Instance> {
    let mut g = gen_matrix(dataset)?;
    let fro = g.frobenius_norm();
    if params.normalize && fro > 0.0 {
        g.scale(1.0 / fro);
    }
    let (x_true, y) = gen_signal_and_obs(app, &g, dataset.seed, params.noise)?;
    let problem = build_problem(app, &g, &y, params)?;
    let x0 = initial_point(app, g.cols(), dataset.seed);
    Ok(Instance { g, x_true, y, problem, x0 })
}
