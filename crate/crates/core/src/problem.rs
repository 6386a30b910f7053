//! DC problems `F(x) = f(x) + h(x) − g(x)` and the application builders.

use dccd_linalg::{
    dot, gram_diagonal, matvec, matvec_t, norm, norm_sq, spectral_norm_sq, sym_eig, ColumnMatrix, DenseMatrix, LinOp,
    Matrix,
};
use serde::{Deserialize, Serialize};

use crate::prox::Separable;
use crate::{Error, Result};

/// Safety factor applied to power-iteration estimates of `‖G‖₂²`.
pub const LIPSCHITZ_SAFETY: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormOrder {
    L1,
    L2,
    Inf,
}

/// Smooth convex part `f`.
#[derive(Debug, Clone)]
pub enum Smooth {
    /// `(α/2)xᵀQx + ⟨p, x⟩`, with `Q = I` when `q` is `None`.
    Quadratic { alpha: f64, q: Option<DenseMatrix>, linear: Option<Vec<f64>> },
    /// `½‖Gx − y‖²`
    LeastSquares { g: ColumnMatrix, y: Vec<f64> },
    /// `½‖max(0, Gx)‖²`
    ReluSquares { g: ColumnMatrix },
}

/// The convex function `g` that is subtracted.
#[derive(Debug, Clone)]
pub enum Concave {
    /// `‖Ax‖₁`
    L1Compose(ColumnMatrix),
    /// `‖Ax‖∞`
    LInfCompose(ColumnMatrix),
    /// `‖Ax‖₂`
    L2Compose(ColumnMatrix),
    /// `Σ max(0, (Ax)_j)`
    ReluCompose(ColumnMatrix),
    /// `ρ` times the sum of the `s` largest `|x_i|`.
    TopS { s: usize, rho: f64 },
    /// `ρ‖x‖₂`
    ScaledNorm2 { rho: f64 },
}

impl Concave {
    pub fn matrix(&self) -> Option<&ColumnMatrix> {
        match self {
            Concave::L1Compose(a) | Concave::LInfCompose(a) | Concave::L2Compose(a) | Concave::ReluCompose(a) => {
                Some(a)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DcProblem {
    pub f: Smooth,
    pub h: Separable,
    pub g: Concave,
    /// Added to every evaluation.
    pub constant: f64,
    /// Coordinate Lipschitz constants of `∇f`.
    pub c: Vec<f64>,
    /// Lipschitz constant of `∇f`.
    pub lipschitz: f64,
    n: usize,
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sum of the `s` largest magnitudes.
pub fn top_s_sum(x: &[f64], s: usize) -> f64 {
    if s >= x.len() {
        return x.iter().map(|v| v.abs()).sum();
    }
    if s == 0 {
        return 0.0;
    }
    let mut m: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    m.select_nth_unstable_by(s - 1, |a, b| b.total_cmp(a));
    m[..s].iter().sum()
}

/// Indices of the `s` largest magnitudes, ties to the lowest index.
pub fn top_s_indices(x: &[f64], s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    idx.truncate(s);
    idx
}

impl DcProblem {
    /// Assembles a problem and derives `c` and `L` from `f`.
    pub fn new(f: Smooth, h: Separable, g: Concave, constant: f64) -> Result<Self> {
        let n = match &f {
            Smooth::Quadratic { q: Some(q), .. } => q.cols(),
            Smooth::Quadratic { q: None, linear: Some(p), .. } => p.len(),
            Smooth::Quadratic { q: None, linear: None, .. } => match (&g, g.matrix()) {
                (_, Some(a)) => a.cols(),
                _ => return Err(Error::Invalid("cannot infer dimension".into())),
            },
            Smooth::LeastSquares { g, .. } | Smooth::ReluSquares { g } => g.cols(),
        };
        Self::with_dim(n, f, h, g, constant)
    }

    /// Like [`DcProblem::new`] with the dimension given explicitly.
    pub fn with_dim(n: usize, f: Smooth, h: Separable, g: Concave, constant: f64) -> Result<Self> {
        let (c, lipschitz) = match &f {
            Smooth::Quadratic { alpha, q, linear } => {
                if !(*alpha > 0.0) {
                    return Err(Error::Invalid(format!("alpha = {alpha} must be positive")));
                }
                if linear.as_ref().is_some_and(|p| p.len() != n) {
                    return Err(Error::Invalid("linear term has the wrong length".into()));
                }
                match q {
                    None => (vec![*alpha; n], *alpha),
                    Some(q) => {
                        if q.rows() != n || q.cols() != n {
                            return Err(Error::Invalid("Q has the wrong shape".into()));
                        }
                        let eig = sym_eig(q)?;
                        if eig.values[n - 1] <= 0.0 {
                            return Err(Error::Invalid("Q is not positive definite".into()));
                        }
                        ((0..n).map(|i| alpha * q.get(i, i)).collect(), alpha * eig.values[0])
                    }
                }
            }
            Smooth::LeastSquares { g, y } => {
                if y.len() != g.rows() {
                    return Err(Error::Invalid("y length differs from rows of G".into()));
                }
                let c = gram_diagonal(g);
                let l = LIPSCHITZ_SAFETY * spectral_norm_sq(g, 1e-10, 20_000);
                (c, l)
            }
            Smooth::ReluSquares { g } => {
                let c = gram_diagonal(g);
                let l = LIPSCHITZ_SAFETY * spectral_norm_sq(g, 1e-10, 20_000);
                (c, l)
            }
        };
        if let Some(a) = g.matrix() {
            if a.cols() != n {
                return Err(Error::Invalid("g matrix has the wrong number of columns".into()));
            }
        }
        if let Concave::TopS { s, rho } = g {
            if s == 0 || s > n || !(rho > 0.0) {
                return Err(Error::Invalid(format!("top-s needs 1 <= s <= n and rho > 0 (s = {s})")));
            }
        }
        let cmax = c.iter().fold(0.0f64, |m, v| m.max(*v));
        Ok(Self { f, h, g, constant, c, lipschitz: lipschitz.max(cmax), n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Matrix whose product the smooth part caches, if any.
    pub fn f_matrix(&self) -> Option<&ColumnMatrix> {
        match &self.f {
            Smooth::LeastSquares { g, .. } | Smooth::ReluSquares { g } => Some(g),
            Smooth::Quadratic { .. } => None,
        }
    }

    pub fn f_value(&self, x: &[f64]) -> f64 {
        match &self.f {
            Smooth::Quadratic { alpha, q, linear } => {
                let quad = match q {
                    None => norm_sq(x),
                    Some(q) => dot(x, &matvec(q, x).expect("dimension")),
                };
                0.5 * alpha * quad + linear.as_ref().map_or(0.0, |p| dot(p, x))
            }
            Smooth::LeastSquares { g, y } => {
                let gx = matvec(g, x).expect("dimension");
                0.5 * gx.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
            Smooth::ReluSquares { g } => {
                0.5 * matvec(g, x).expect("dimension").iter().map(|v| relu(*v).powi(2)).sum::<f64>()
            }
        }
    }

    pub fn grad_f(&self, x: &[f64]) -> Vec<f64> {
        match &self.f {
            Smooth::Quadratic { alpha, q, linear } => {
                let mut gr: Vec<f64> = match q {
                    None => x.iter().map(|v| alpha * v).collect(),
                    Some(q) => matvec(q, x).expect("dimension").iter().map(|v| alpha * v).collect(),
                };
                if let Some(p) = linear {
                    gr.iter_mut().zip(p).for_each(|(a, b)| *a += b);
                }
                gr
            }
            Smooth::LeastSquares { g, y } => {
                let r: Vec<f64> = matvec(g, x).expect("dimension").iter().zip(y).map(|(a, b)| a - b).collect();
                matvec_t(g, &r).expect("dimension")
            }
            Smooth::ReluSquares { g } => {
                let u: Vec<f64> = matvec(g, x).expect("dimension").into_iter().map(relu).collect();
                matvec_t(g, &u).expect("dimension")
            }
        }
    }

    /// `∇_i f(x)` computed from scratch.
    pub fn coord_grad_f(&self, x: &[f64], i: usize) -> f64 {
        match &self.f {
            Smooth::Quadratic { alpha, q, linear } => {
                let qi = match q {
                    None => x[i],
                    Some(q) => dot(q.row(i), x),
                };
                alpha * qi + linear.as_ref().map_or(0.0, |p| p[i])
            }
            _ => self.grad_f(x)[i],
        }
    }

    pub fn h_value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&v| self.h.eval_scalar(v)).sum()
    }

    pub fn g_value(&self, x: &[f64]) -> f64 {
        match &self.g {
            Concave::L1Compose(a) => matvec(a, x).expect("dimension").iter().map(|v| v.abs()).sum(),
            Concave::LInfCompose(a) => matvec(a, x).expect("dimension").iter().fold(0.0, |m, v| m.max(v.abs())),
            Concave::L2Compose(a) => norm(&matvec(a, x).expect("dimension")),
            Concave::ReluCompose(a) => matvec(a, x).expect("dimension").iter().map(|v| relu(*v)).sum(),
            Concave::TopS { s, rho } => rho * top_s_sum(x, *s),
            Concave::ScaledNorm2 { rho } => rho * norm(x),
        }
    }

    /// `F(x)`; `+∞` outside a box constraint.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.f_value(x) + self.h_value(x) - self.g_value(x) + self.constant
    }

    /// Clamps into the box when `h` is a box indicator.
    pub fn project(&self, x: &mut [f64]) {
        if let Separable::Box { lo, hi } = self.h {
            x.iter_mut().for_each(|v| *v = v.max(lo).min(hi));
        }
    }

    /// One element of `∂g(x)` under fixed selection rules (sign(0) = 0,
    /// lowest index on ties).
    pub fn g_subgradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.g {
            Concave::L1Compose(a) => {
                let s: Vec<f64> = matvec(a, x).expect("dimension").into_iter().map(sign).collect();
                matvec_t(a, &s).expect("dimension")
            }
            Concave::LInfCompose(a) => {
                let ax = matvec(a, x).expect("dimension");
                let mut best = 0;
                for (j, v) in ax.iter().enumerate() {
                    if v.abs() > ax[best].abs() {
                        best = j;
                    }
                }
                let mut e = vec![0.0; ax.len()];
                if !ax.is_empty() {
                    e[best] = sign(ax[best]);
                }
                matvec_t(a, &e).expect("dimension")
            }
            Concave::L2Compose(a) => {
                let ax = matvec(a, x).expect("dimension");
                let nrm = norm(&ax);
                if nrm == 0.0 {
                    return vec![0.0; self.n];
                }
                let u: Vec<f64> = ax.iter().map(|v| v / nrm).collect();
                matvec_t(a, &u).expect("dimension")
            }
            Concave::ReluCompose(a) => {
                let u: Vec<f64> = matvec(a, x).expect("dimension").into_iter().map(|v| 0.5 * (1.0 + sign(v))).collect();
                matvec_t(a, &u).expect("dimension")
            }
            Concave::TopS { s, rho } => {
                let mut out = vec![0.0; self.n];
                for i in top_s_indices(x, *s) {
                    out[i] = rho * sign(x[i]);
                }
                out
            }
            Concave::ScaledNorm2 { rho } => {
                let nrm = norm(x);
                if nrm == 0.0 {
                    vec![0.0; self.n]
                } else {
                    x.iter().map(|v| rho * v / nrm).collect()
                }
            }
        }
    }

    /// For every coordinate `i`, the interval `{s_i : s ∈ ∂g(x)}`.
    ///
    /// Entries of `Ax` below `1e-9` relative to `(|A||x|)_j` count as zero.
    pub fn g_subgradient_ranges(&self, x: &[f64]) -> Vec<(f64, f64)> {
        let n = self.n;
        let composed = |a: &ColumnMatrix| {
            let ax = matvec(a, x).expect("dimension");
            let mut mag = vec![0.0; a.rows()];
            for (i, &xi) in x.iter().enumerate() {
                a.col(i).for_each(|j, v| mag[j] += (v * xi).abs());
            }
            let zero: Vec<bool> = ax.iter().zip(&mag).map(|(v, m)| v.abs() <= 1e-9 * m).collect();
            (ax, zero)
        };
        match &self.g {
            Concave::L1Compose(a) => {
                let (ax, zero) = composed(a);
                (0..n)
                    .map(|i| {
                        let (mut base, mut rad) = (0.0, 0.0);
                        a.col(i).for_each(|j, v| {
                            if zero[j] {
                                rad += v.abs();
                            } else {
                                base += v * sign(ax[j]);
                            }
                        });
                        (base - rad, base + rad)
                    })
                    .collect()
            }
            Concave::ReluCompose(a) => {
                let (ax, zero) = composed(a);
                (0..n)
                    .map(|i| {
                        let (mut lo, mut hi) = (0.0, 0.0);
                        a.col(i).for_each(|j, v| {
                            if zero[j] {
                                lo += v.min(0.0);
                                hi += v.max(0.0);
                            } else if ax[j] > 0.0 {
                                lo += v;
                                hi += v;
                            }
                        });
                        (lo, hi)
                    })
                    .collect()
            }
            Concave::LInfCompose(a) => {
                let (ax, zero) = composed(a);
                let top = ax.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if zero.iter().all(|z| *z) || top == 0.0 {
                    return (0..n)
                        .map(|i| {
                            let mut m = 0.0f64;
                            a.col(i).for_each(|_, v| m = m.max(v.abs()));
                            (-m, m)
                        })
                        .collect();
                }
                let rows: Vec<usize> = (0..ax.len()).filter(|&j| ax[j].abs() >= top * (1.0 - 1e-9)).collect();
                (0..n)
                    .map(|i| {
                        let vals = rows.iter().map(|&j| sign(ax[j]) * a.get(j, i));
                        vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)))
                    })
                    .collect()
            }
            Concave::L2Compose(a) => {
                let (ax, zero) = composed(a);
                if zero.iter().all(|z| *z) {
                    return (0..n)
                        .map(|i| {
                            let r = a.col(i).norm_sq().sqrt();
                            (-r, r)
                        })
                        .collect();
                }
                let nrm = norm(&ax);
                (0..n)
                    .map(|i| {
                        let v = a.col(i).dot(&ax) / nrm;
                        (v, v)
                    })
                    .collect()
            }
            Concave::ScaledNorm2 { rho } => {
                let nrm = norm(x);
                if nrm == 0.0 {
                    vec![(-rho, *rho); n]
                } else {
                    x.iter().map(|v| (rho * v / nrm, rho * v / nrm)).collect()
                }
            }
            Concave::TopS { s, rho } => {
                let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
                mags.sort_by(|a, b| b.total_cmp(a));
                let ts = mags[*s - 1];
                let ts1 = mags.get(*s).copied().unwrap_or(f64::NEG_INFINITY);
                x.iter()
                    .map(|&v| {
                        let m = v.abs();
                        let (l, h) = if m < ts {
                            (0.0, 0.0)
                        } else if v == 0.0 {
                            (-1.0, 1.0)
                        } else if m > ts1 {
                            (sign(v), sign(v))
                        } else {
                            (sign(v).min(0.0), sign(v).max(0.0))
                        };
                        (rho * l, rho * h)
                    })
                    .collect()
            }
        }
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{what} has non-finite entries")))
    }
}

/// `min (α/2)xᵀQx − ‖Gx‖_p`; `q = None` means `Q = I`.
pub fn build_eig_lp(g: &Matrix, q: Option<&DenseMatrix>, alpha: f64, p: NormOrder) -> Result<DcProblem> {
    let a = ColumnMatrix::from(g);
    let q = q.filter(|q| !q.is_identity()).cloned();
    let gterm = match p {
        NormOrder::L1 => Concave::L1Compose(a),
        NormOrder::L2 => Concave::L2Compose(a),
        NormOrder::Inf => Concave::LInfCompose(a),
    };
    DcProblem::with_dim(g.cols(), Smooth::Quadratic { alpha, q, linear: None }, Separable::Zero, gterm, 0.0)
}

/// `min ½‖Gx − y‖² + ρ‖x‖₁ − ρ·(sum of the s largest |x_i|)`.
pub fn build_approx_sparse(g: &Matrix, y: &[f64], rho: f64, s: usize) -> Result<DcProblem> {
    check_finite(y, "y")?;
    if !(rho > 0.0) {
        return Err(Error::Invalid("rho must be positive".into()));
    }
    DcProblem::new(
        Smooth::LeastSquares { g: g.into(), y: y.to_vec() },
        Separable::L1 { rho },
        Concave::TopS { s, rho },
        0.0,
    )
}

/// `min_{‖x‖∞ ≤ 1} ½‖Gx − y‖² + ρ(√n − ‖x‖)`.
pub fn build_approx_binary(g: &Matrix, y: &[f64], rho: f64) -> Result<DcProblem> {
    check_finite(y, "y")?;
    if !(rho > 0.0) {
        return Err(Error::Invalid("rho must be positive".into()));
    }
    let n = g.cols();
    DcProblem::new(
        Smooth::LeastSquares { g: g.into(), y: y.to_vec() },
        Separable::Box { lo: -1.0, hi: 1.0 },
        Concave::ScaledNorm2 { rho },
        rho * (n as f64).sqrt(),
    )
}

/// `min ½‖max(0, Gx) − y‖²` written as
/// `½‖max(0,Gx)‖² + ½‖y‖² − ‖max(0, diag(y)Gx)‖₁` (requires `y ≥ 0`).
pub fn build_glr(g: &Matrix, y: &[f64]) -> Result<DcProblem> {
    check_finite(y, "y")?;
    if let Some(j) = y.iter().position(|v| *v < 0.0) {
        return Err(Error::Invalid(format!("y[{j}] is negative")));
    }
    let cols = ColumnMatrix::from(g);
    if y.len() != cols.rows() {
        return Err(Error::Invalid("y length differs from rows of G".into()));
    }
    let a = cols.scale_rows(y);
    DcProblem::new(Smooth::ReluSquares { g: cols }, Separable::Zero, Concave::ReluCompose(a), 0.5 * norm_sq(y))
}

/// `min (α/2)‖x‖² − √(xᵀCx)` with `g = ‖Bx‖`, `B = Λ^{1/2}Uᵀ`.
pub fn build_pca(c: &DenseMatrix, alpha: f64) -> Result<DcProblem> {
    let eig = sym_eig(c)?;
    let n = c.rows();
    if let Some(&neg) = eig.values.iter().find(|v| **v < -1e-8) {
        return Err(Error::Invalid(format!("C has eigenvalue {neg} < 0")));
    }
    let mut b = DenseMatrix::zeros(n, n);
    for k in 0..n {
        let s = eig.values[k].max(0.0).sqrt();
        for j in 0..n {
            b.set(k, j, s * eig.vectors.get(j, k));
        }
    }
    DcProblem::with_dim(
        n,
        Smooth::Quadratic { alpha, q: None, linear: None },
        Separable::Zero,
        Concave::L2Compose(ColumnMatrix::from(&b)),
        0.0,
    )
}

/// Rescalings of a nonzero `x̄` onto `{vᵀQv = 1}` and `{‖Gz‖_p = 1}`.
pub fn rescale_solutions(
    x_bar: &[f64],
    g: &Matrix,
    q: Option<&DenseMatrix>,
    p: NormOrder,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x_bar.iter().all(|v| *v == 0.0) {
        return Err(Error::Invalid("x_bar is zero".into()));
    }
    let quad = match q {
        None => norm_sq(x_bar),
        Some(q) => dot(x_bar, &matvec(q, x_bar)?),
    };
    if !(quad > 0.0) {
        return Err(Error::Invalid("x_bar' Q x_bar is not positive".into()));
    }
    let gx = matvec(g, x_bar)?;
    let gn = match p {
        NormOrder::L1 => gx.iter().map(|v| v.abs()).sum(),
        NormOrder::L2 => norm(&gx),
        NormOrder::Inf => gx.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
    };
    if gn == 0.0 {
        return Err(Error::Invalid("G x_bar is zero".into()));
    }
    let s = quad.sqrt();
    Ok((x_bar.iter().map(|v| v / s).collect(), x_bar.iter().map(|v| v / gn).collect()))
}
