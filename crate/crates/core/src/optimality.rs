//! Stationarity residuals, point classification, the small worked problems
//! with exact enumeration of their critical points, and PCA diagnostics.

use dccd_linalg::{cardano_k, dot, matvec, norm, norm_sq, sym_eig, ColumnMatrix, DenseMatrix, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::problem::{build_eig_lp, Concave, DcProblem, NormOrder, Smooth};
use crate::prox::{prox_convex_sca, Separable};
use crate::solvers::{coordinate_prox, Cache};
use crate::{Error, Result};

/// `θ` used when classifying points.
pub const CLASSIFY_THETA: f64 = 1e-6;

/// Residual at or below which a point counts as coordinate-wise stationary.
pub const CWS_TOL: f64 = 1e-10;

/// Which elements of `∂g(x)` the critical-point residual may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SubgradientSelection {
    /// Any element of the per-coordinate range of `∂g(x)`.
    #[default]
    Full,
    /// The single element returned by [`DcProblem::g_subgradient`].
    Pinned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub point: Vec<f64>,
    #[serde(rename = "F_value")]
    pub f_value: f64,
    pub cws_residual: f64,
    pub sca_residual: f64,
    /// Coordinate with the largest CWS step.
    pub worst_cws: usize,
    /// Coordinate with the largest SCA distance.
    pub worst_sca: usize,
}

impl StationaryReport {
    pub fn is_cws(&self, eps: f64) -> bool {
        self.cws_residual <= eps
    }

    pub fn is_critical(&self, eps: f64) -> bool {
        self.sca_residual <= eps
    }
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = j;
        }
    }
    best
}

/// The smallest-magnitude global minimizer of `M_i(x, ·)` for every `i`.
pub fn cws_steps(p: &DcProblem, x: &[f64], theta: f64) -> Result<Vec<f64>> {
    check_point(p, x)?;
    let mut cache = Cache::new(p, x);
    (0..p.n())
        .map(|i| {
            let b = cache.coord_grad(p, x, i);
            Ok(coordinate_prox(p, x, i, p.c[i] + theta, b, &mut cache)?.eta)
        })
        .collect()
}

/// `(1/n) Σ_i dist(0, argmin_η M_i(x, η))²`.
pub fn cws_residual(p: &DcProblem, x: &[f64], theta: f64) -> Result<f64> {
    let steps = cws_steps(p, x, theta)?;
    Ok(steps.iter().map(|e| e * e).sum::<f64>() / steps.len().max(1) as f64)
}

/// Per-coordinate `dist(0, argmin_η P_i(x, η))`, minimized over the allowed
/// subgradients of `g`.
pub fn sca_distances(p: &DcProblem, x: &[f64], theta: f64, sel: SubgradientSelection) -> Result<Vec<f64>> {
    check_point(p, x)?;
    let grad = p.grad_f(x);
    let ranges = match sel {
        SubgradientSelection::Full => p.g_subgradient_ranges(x),
        SubgradientSelection::Pinned => p.g_subgradient(x).into_iter().map(|s| (s, s)).collect(),
    };
    (0..p.n())
        .map(|i| {
            let a = p.c[i] + theta;
            let (lo, hi) = ranges[i];
            // the step is nondecreasing in the subgradient entry
            let e_lo = prox_convex_sca(a, grad[i] - lo, p.h, x[i])?.eta;
            let e_hi = prox_convex_sca(a, grad[i] - hi, p.h, x[i])?.eta;
            Ok(if e_lo <= 0.0 && e_hi >= 0.0 { 0.0 } else { e_lo.abs().min(e_hi.abs()) })
        })
        .collect()
}

/// `R(x) = (1/n) Σ_i |dist(0, argmin_η P_i(x, η))|` over the full
/// per-coordinate subgradient ranges.
pub fn sca_residual(p: &DcProblem, x: &[f64], theta: f64) -> Result<f64> {
    sca_residual_with(p, x, theta, SubgradientSelection::Full)
}

pub fn sca_residual_with(p: &DcProblem, x: &[f64], theta: f64, sel: SubgradientSelection) -> Result<f64> {
    let d = sca_distances(p, x, theta, sel)?;
    Ok(d.iter().sum::<f64>() / d.len().max(1) as f64)
}

pub fn classify(p: &DcProblem, x: &[f64], theta: f64) -> Result<StationaryReport> {
    let steps = cws_steps(p, x, theta)?;
    let dists = sca_distances(p, x, theta, SubgradientSelection::Full)?;
    let n = p.n().max(1) as f64;
    Ok(StationaryReport {
        point: x.to_vec(),
        f_value: p.evaluate(x),
        cws_residual: steps.iter().map(|e| e * e).sum::<f64>() / n,
        sca_residual: dists.iter().sum::<f64>() / n,
        worst_cws: argmax_abs(&steps),
        worst_sca: argmax_abs(&dists),
    })
}

fn check_point(p: &DcProblem, x: &[f64]) -> Result<()> {
    if x.len() != p.n() {
        return Err(Error::Invalid(format!("point has length {}, expected {}", x.len(), p.n())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("point has non-finite entries".into()));
    }
    Ok(())
}

/// Largest `F(x) − F(x+d) − ½‖d‖²_{c+θ+ρ}` over `d = 0` and `n_samples`
/// draws uniform in the ball of the given radius. A nonpositive value means
/// no sample violated the growth bound.
pub fn quadratic_growth_check(
    p: &DcProblem,
    x: &[f64],
    rho: f64,
    theta: f64,
    n_samples: usize,
    radius: f64,
    seed: u64,
) -> Result<f64> {
    check_point(p, x)?;
    let n = p.n();
    let fx = p.evaluate(x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut y = vec![0.0; n];
    for _ in 0..n_samples {
        let d = ball_sample(&mut rng, n, radius);
        for j in 0..n {
            y[j] = x[j] + d[j];
        }
        let weighted: f64 = (0..n).map(|j| (p.c[j] + theta + rho) * d[j] * d[j]).sum();
        worst = worst.max(fx - p.evaluate(&y) - 0.5 * weighted);
    }
    Ok(worst)
}

fn ball_sample(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    let mut d: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let nrm = norm(&d);
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    if nrm > 0.0 {
        d.iter_mut().for_each(|v| *v *= r / nrm);
    }
    d
}

/// Slacks of the four coordinate-sum relations for the draw `(x, d, c̄)`:
/// the two identity gaps (should be 0) and the two inequality slacks
/// (should be ≥ 0 when `c̄ ≥ c`).
pub fn coordinate_sum_gaps(p: &DcProblem, x: &[f64], d: &[f64], cbar: &[f64]) -> Result<[f64; 4]> {
    check_point(p, x)?;
    let n = p.n();
    if d.len() != n || cbar.len() != n {
        return Err(Error::Invalid("d and cbar must have length n".into()));
    }
    let wnorm = |v: &[f64]| v.iter().zip(cbar).map(|(a, c)| c * a * a).sum::<f64>();
    let nm1 = (n - 1) as f64;
    let xd: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + b).collect();
    let mut y = x.to_vec();
    let (mut norms, mut hs, mut fs, mut gs) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        y[i] = x[i] + d[i];
        norms += wnorm(&y);
        hs += p.h_value(&y);
        fs += p.f_value(&y);
        gs += p.g_value(&y);
        y[i] = x[i];
    }
    let norm_gap = norms - (wnorm(&xd) + nm1 * wnorm(x));
    let h_gap = hs - (p.h_value(&xd) + nm1 * p.h_value(x));
    let fx = p.f_value(x);
    let f_slack = fx + dot(&p.grad_f(x), d) + 0.5 * wnorm(d) + nm1 * fx - fs;
    let gx = p.g_value(x);
    let g_slack = (-gx - dot(&p.g_subgradient(x), d) - nm1 * gx) - (-gs);
    Ok([norm_gap, h_gap, f_slack, g_slack])
}

/// One row of an enumeration of candidate critical points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumRow {
    pub y_pattern: Vec<String>,
    pub x: Option<Vec<f64>>,
    #[serde(rename = "F")]
    pub f: Option<f64>,
    pub critical: bool,
    pub cws: bool,
}

/// `min (x−1)² − 4|x|`.
pub fn example_1d() -> DcProblem {
    let a = DenseMatrix::from_rows(&[[4.0]]).expect("1x1");
    DcProblem::with_dim(
        1,
        Smooth::Quadratic { alpha: 2.0, q: None, linear: Some(vec![-2.0]) },
        Separable::Zero,
        Concave::L1Compose(ColumnMatrix::from(&a)),
        1.0,
    )
    .expect("valid problem")
}

fn l1_example_q() -> DenseMatrix {
    DenseMatrix::from_rows(&[[4.0, 0.0, 0.0], [0.0, 2.0, -1.0], [0.0, -1.0, 1.0]]).expect("3x3")
}

fn l1_example_a() -> DenseMatrix {
    DenseMatrix::from_rows(&[[1.0, -1.0, 1.0], [3.0, 1.0, 0.0], [4.0, 2.0, -1.0]]).expect("3x3")
}

/// The 4×3 matrix shared by the ℓ₂ and ℓ∞ examples.
pub fn example_a() -> DenseMatrix {
    DenseMatrix::from_rows(&[[1.0, -1.0, 1.0], [2.0, 0.0, 2.0], [3.0, 1.0, 0.0], [4.0, 2.0, -1.0]]).expect("4x3")
}

/// `min ½xᵀQx + ⟨x, 1⟩ − ‖Ax‖₁` with 3×3 `Q` and `A`.
pub fn l1_example() -> DcProblem {
    DcProblem::with_dim(
        3,
        Smooth::Quadratic { alpha: 1.0, q: Some(l1_example_q()), linear: Some(vec![1.0; 3]) },
        Separable::Zero,
        Concave::L1Compose(ColumnMatrix::from(&l1_example_a())),
        0.0,
    )
    .expect("valid problem")
}

/// `min ½‖x‖² − ‖Ax‖₂`.
pub fn l2_example() -> DcProblem {
    build_eig_lp(&Matrix::Dense(example_a()), None, 1.0, NormOrder::L2).expect("valid problem")
}

/// `min ½‖x‖² − ‖Ax‖∞`.
pub fn linf_example() -> DcProblem {
    build_eig_lp(&Matrix::Dense(example_a()), None, 1.0, NormOrder::Inf).expect("valid problem")
}

/// Gaussian elimination with partial pivoting; `None` when a pivot falls
/// below `1e-12`.
fn solve_linear(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs()))?;
        if m[piv][k].abs() < 1e-12 {
            return None;
        }
        m.swap(k, piv);
        rhs.swap(k, piv);
        for r in k + 1..n {
            let f = m[r][k] / m[k][k];
            for c in k..n {
                m[r][c] -= f * m[k][c];
            }
            rhs[r] -= f * rhs[k];
        }
    }
    let mut out = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| m[k][c] * out[c]).sum();
        out[k] = (rhs[k] - s) / m[k][k];
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dual {
    Plus,
    Free,
    Minus,
}

impl Dual {
    fn label(self) -> String {
        match self {
            Dual::Plus => "1".into(),
            Dual::Free => "[-1, 1]".into(),
            Dual::Minus => "-1".into(),
        }
    }
}

fn cws_flag(p: &DcProblem, x: &[f64]) -> Result<bool> {
    Ok(cws_residual(p, x, CLASSIFY_THETA)? <= CWS_TOL)
}

/// All 27 dual patterns `y ∈ {1, [−1,1], −1}³` for the ℓ₁ example, in the
/// order `1, [−1,1], −1` per position with the first position slowest.
///
/// Fixed rows contribute `y_j a_j` to `Qx + p = Aᵀy`; free rows add the
/// unknown `y_j` and the equation `(Ax)_j = 0`. A row is critical when the
/// solution has `sign((Ax)_j) = y_j` on fixed rows and `|y_j| ≤ 1` on free
/// rows.
pub fn enumerate_l1_example() -> Result<Vec<EnumRow>> {
    let p = l1_example();
    let (q, a) = (l1_example_q(), l1_example_a());
    let lin = [1.0; 3];
    let choices = [Dual::Plus, Dual::Free, Dual::Minus];
    let mut rows = Vec::with_capacity(27);
    for k in 0..27 {
        let pat = [choices[k / 9], choices[(k / 3) % 3], choices[k % 3]];
        let free: Vec<usize> = (0..3).filter(|&j| pat[j] == Dual::Free).collect();
        let dim = 3 + free.len();
        let mut m = vec![vec![0.0; dim]; dim];
        let mut rhs = vec![0.0; dim];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] = q.get(r, c);
            }
            rhs[r] = -lin[r];
            for j in 0..3 {
                match pat[j] {
                    Dual::Plus => rhs[r] += a.get(j, r),
                    Dual::Minus => rhs[r] -= a.get(j, r),
                    Dual::Free => {}
                }
            }
            for (t, &j) in free.iter().enumerate() {
                m[r][3 + t] = -a.get(j, r);
            }
        }
        for (t, &j) in free.iter().enumerate() {
            for c in 0..3 {
                m[3 + t][c] = a.get(j, c);
            }
        }
        let labels = pat.iter().map(|d| d.label()).collect();
        let Some(sol) = solve_linear(m, rhs) else {
            rows.push(EnumRow { y_pattern: labels, x: None, f: None, critical: false, cws: false });
            continue;
        };
        let x = sol[..3].to_vec();
        let ax = matvec(&a, &x)?;
        let scale = 1.0 + norm(&x) * a.max_abs();
        let mut consistent = true;
        for j in 0..3 {
            match pat[j] {
                Dual::Plus => consistent &= ax[j] > 1e-9 * scale,
                Dual::Minus => consistent &= ax[j] < -1e-9 * scale,
                Dual::Free => {}
            }
        }
        for (t, _) in free.iter().enumerate() {
            consistent &= sol[3 + t].abs() <= 1.0 + 1e-12;
        }
        rows.push(EnumRow {
            y_pattern: labels,
            f: Some(p.evaluate(&x)),
            cws: cws_flag(&p, &x)?,
            x: Some(x),
            critical: consistent,
        });
    }
    Ok(rows)
}

/// Rows for `±√λ_k u_k` (smallest `λ` first) and then `0`, where
/// `(λ_k, u_k)` are the eigenpairs of `AᵀA`.
pub fn enumerate_l2_example() -> Result<Vec<EnumRow>> {
    let p = l2_example();
    let a = example_a();
    let eig = sym_eig(&a.gram())?;
    let n = eig.values.len();
    let mut rows = Vec::new();
    for k in (0..n).rev() {
        let u = eig.vector(k);
        let s = eig.values[k].max(0.0).sqrt();
        for sign in [1.0, -1.0] {
            let x: Vec<f64> = u.iter().map(|v| sign * s * v).collect();
            let ax = matvec(&a, &x)?;
            let nrm = norm(&ax);
            let critical = nrm > 0.0 && {
                let atax = dccd_linalg::matvec_t(&a, &ax)?;
                let g: Vec<f64> = x.iter().zip(&atax).map(|(xi, t)| xi - t / nrm).collect();
                norm(&g) <= 1e-8 * (1.0 + norm(&x))
            };
            rows.push(EnumRow {
                y_pattern: vec![format!("{}sqrt(lambda_{})u_{}", if sign > 0.0 { "+" } else { "-" }, k + 1, k + 1)],
                f: Some(p.evaluate(&x)),
                cws: cws_flag(&p, &x)?,
                x: Some(x),
                critical,
            });
        }
    }
    let zero = vec![0.0; n];
    rows.push(EnumRow {
        y_pattern: vec!["0".into()],
        f: Some(p.evaluate(&zero)),
        cws: cws_flag(&p, &zero)?,
        x: Some(zero),
        // ∇f(0) = 0 lies in ∂‖A·‖₂(0) = Aᵀ(unit ball)
        critical: true,
    });
    Ok(rows)
}

/// Rows for `y = e_1, …, e_m, −e_1, …, −e_m` with `x = Aᵀy`. A row is
/// critical when row `j` attains `‖Ax‖∞` with the sign of `y_j`.
pub fn enumerate_linf_example() -> Result<Vec<EnumRow>> {
    let p = linf_example();
    let a = example_a();
    let m = a.rows();
    let mut rows = Vec::new();
    for sign in [1.0, -1.0] {
        for j in 0..m {
            let mut y = vec![0.0; m];
            y[j] = sign;
            let x = dccd_linalg::matvec_t(&a, &y)?;
            let ax = matvec(&a, &x)?;
            let top = ax.iter().fold(0.0f64, |t, v| t.max(v.abs()));
            let critical = sign * ax[j] >= top - 1e-12 * (1.0 + top);
            let label = |v: f64| if v == 0.0 { "0".to_string() } else { format!("{v}") };
            rows.push(EnumRow {
                y_pattern: y.iter().map(|v| label(*v)).collect(),
                f: Some(p.evaluate(&x)),
                cws: cws_flag(&p, &x)?,
                x: Some(x),
                critical,
            });
        }
    }
    Ok(rows)
}

/// Closed-form solution of `min (α/2)‖x‖² − √(xᵀCx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaClosedForm {
    pub x_opt: Vec<f64>,
    pub f_opt: f64,
    /// `0` and `±(√λ_k/α)u_k` for every `λ_k > 0`.
    pub critical: Vec<Vec<f64>>,
}

pub fn pca_closed_form(c: &DenseMatrix, alpha: f64) -> Result<PcaClosedForm> {
    if !(alpha > 0.0) {
        return Err(Error::Invalid("alpha must be positive".into()));
    }
    let eig = sym_eig(c)?;
    let n = c.rows();
    let mut critical = vec![vec![0.0; n]];
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam > 0.0 {
            let u = eig.vector(k);
            let s = lam.sqrt() / alpha;
            critical.push(u.iter().map(|v| s * v).collect());
            critical.push(u.iter().map(|v| -s * v).collect());
        }
    }
    let lam1 = eig.values.first().copied().unwrap_or(0.0);
    if lam1 <= 0.0 {
        return Ok(PcaClosedForm { x_opt: vec![0.0; n], f_opt: 0.0, critical });
    }
    Ok(PcaClosedForm { x_opt: critical[1].clone(), f_opt: -lam1 / (2.0 * alpha), critical })
}

pub fn pca_objective(c: &DenseMatrix, alpha: f64, x: &[f64]) -> f64 {
    let cx = matvec(c, x).expect("dimension");
    0.5 * alpha * norm_sq(x) - dot(x, &cx).max(0.0).sqrt()
}

/// `∇F(x) = αx − Cx/√(xᵀCx)`; at `xᵀCx = 0` the `αx` part alone.
pub fn pca_gradient(c: &DenseMatrix, alpha: f64, x: &[f64]) -> Vec<f64> {
    let cx = matvec(c, x).expect("dimension");
    let q = dot(x, &cx);
    if q <= 0.0 {
        return x.iter().map(|v| alpha * v).collect();
    }
    let s = q.sqrt();
    x.iter().zip(&cx).map(|(xi, ci)| alpha * xi - ci / s).collect()
}

/// Which Hessian expression to evaluate for `α = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianForm {
    /// `I − C/√q + (Cx)(Cx)ᵀ/q^{3/2}`, the second derivative of `F`.
    Exact,
    /// `(√q·I − C + xxᵀ)/√q`, which agrees with `Exact` at critical points.
    Printed,
}

/// Hessian of `½‖x‖² − √(xᵀCx)` at `x` with `q = xᵀCx > 0`.
pub fn pca_hessian(c: &DenseMatrix, x: &[f64], form: HessianForm) -> Result<DenseMatrix> {
    let cx = matvec(c, x)?;
    let q = dot(x, &cx);
    if !(q > 0.0) {
        return Err(Error::Invalid("x'Cx must be positive".into()));
    }
    let s = q.sqrt();
    let n = x.len();
    let mut h = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            let v = match form {
                HessianForm::Exact => id - c.get(i, j) / s + cx[i] * cx[j] / (q * s),
                HessianForm::Printed => (s * id - c.get(i, j) + x[i] * x[j]) / s,
            };
            h.set(i, j, v);
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianBounds {
    pub sigma: f64,
    pub tau: f64,
    pub varpi_bar: f64,
}

/// Lower and upper Hessian bounds within `varpi` of `x̄ = √λ₁u₁` for
/// `α = 1`, and the admissible radius `ϖ̄`.
pub fn pca_hessian_bounds(c: &DenseMatrix, varpi: f64) -> Result<HessianBounds> {
    let eig = sym_eig(c)?;
    if eig.values.len() < 2 {
        return Err(Error::Invalid("C must be at least 2x2".into()));
    }
    let (l1, l2) = (eig.values[0], eig.values[1]);
    if !(l2 > 0.0 && l1 > l2) {
        return Err(Error::Invalid(format!("need lambda1 > lambda2 > 0, got {l1} and {l2}")));
    }
    let r1 = l1.sqrt();
    let delta = 1.0 - l2 / l1;
    let t = 1.0 + 3.0 / r1;
    let xi = l1 / 6.0 * (-t + (t * t + 12.0 * delta / l1).sqrt());
    let varpi_bar = (r1 * cardano_k(l2 / l1)?).min(xi);
    let sigma = 1.0 - l2 / l1 - varpi * t - 3.0 * varpi * varpi / l1;
    let tau = 1.0 + l1 * l1 * (r1 + varpi).powi(2) / (l1 - varpi * r1).powi(3);
    Ok(HessianBounds { sigma, tau, varpi_bar })
}

/// Smallest and largest Hessian eigenvalues over `n_samples` points drawn
/// uniformly from the ball of radius `radius` around `√λ₁u₁`.
pub fn pca_hessian_extremes(
    c: &DenseMatrix,
    radius: f64,
    n_samples: usize,
    seed: u64,
    form: HessianForm,
) -> Result<(f64, f64)> {
    let x_bar = pca_closed_form(c, 1.0)?.x_opt;
    let n = x_bar.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..n_samples {
        let d = ball_sample(&mut rng, n, radius);
        let x: Vec<f64> = x_bar.iter().zip(&d).map(|(a, b)| a + b).collect();
        let eig = sym_eig(&pca_hessian(c, &x, form)?)?;
        lo = lo.min(eig.values[n - 1]);
        hi = hi.max(eig.values[0]);
    }
    Ok((lo, hi))
}
