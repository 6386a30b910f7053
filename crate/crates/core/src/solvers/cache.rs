use dccd_linalg::{dot, matvec, norm_sq, LinOp};

use crate::problem::{top_s_sum, Concave, DcProblem, Smooth};
use crate::prox::{self, Interval, ProxQuery, ProxResult, Separable};
use crate::{Error, Result};

/// Products and partial objective values kept in step with `x`.
///
/// `fx` is `Gx − y` for least squares and `Gx` for the ReLU loss; `gx` is
/// `Ax` for a composed `g`. Everything is recomputed from scratch every `n`
/// updates.
#[derive(Debug, Clone)]
pub struct Cache {
    pub fx: Vec<f64>,
    pub gx: Vec<f64>,
    pub x_sq: f64,
    pub gx_sq: f64,
    pub f_val: f64,
    pub h_val: f64,
    pub g_val: f64,
    since_refresh: usize,
    scratch_g: Vec<f64>,
    scratch_d: Vec<f64>,
}

impl Cache {
    pub fn new(p: &DcProblem, x: &[f64]) -> Self {
        let mut c = Cache {
            fx: Vec::new(),
            gx: Vec::new(),
            x_sq: 0.0,
            gx_sq: 0.0,
            f_val: 0.0,
            h_val: 0.0,
            g_val: 0.0,
            since_refresh: 0,
            scratch_g: Vec::new(),
            scratch_d: Vec::new(),
        };
        c.refresh(p, x);
        c
    }

    pub fn refresh(&mut self, p: &DcProblem, x: &[f64]) {
        self.fx = match &p.f {
            Smooth::LeastSquares { g, y } => {
                matvec(g, x).expect("dimension").iter().zip(y).map(|(a, b)| a - b).collect()
            }
            Smooth::ReluSquares { g } => matvec(g, x).expect("dimension"),
            Smooth::Quadratic { .. } => Vec::new(),
        };
        self.gx = p.g.matrix().map_or_else(Vec::new, |a| matvec(a, x).expect("dimension"));
        self.x_sq = norm_sq(x);
        self.gx_sq = norm_sq(&self.gx);
        self.f_val = match &p.f {
            Smooth::LeastSquares { .. } => 0.5 * norm_sq(&self.fx),
            Smooth::ReluSquares { .. } => 0.5 * self.fx.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>(),
            Smooth::Quadratic { .. } => p.f_value(x),
        };
        self.h_val = p.h_value(x);
        self.g_val = self.g_from_cache(p, x);
        self.since_refresh = 0;
    }

    fn g_from_cache(&self, p: &DcProblem, x: &[f64]) -> f64 {
        match &p.g {
            Concave::L1Compose(_) => self.gx.iter().map(|v| v.abs()).sum(),
            Concave::LInfCompose(_) => self.gx.iter().fold(0.0, |m, v| m.max(v.abs())),
            Concave::L2Compose(_) => self.gx_sq.max(0.0).sqrt(),
            Concave::ReluCompose(_) => self.gx.iter().map(|v| v.max(0.0)).sum(),
            Concave::TopS { s, rho } => rho * top_s_sum(x, *s),
            Concave::ScaledNorm2 { rho } => rho * self.x_sq.max(0.0).sqrt(),
        }
    }

    /// `F(x)` from cached pieces.
    pub fn objective(&self, p: &DcProblem) -> f64 {
        self.f_val + self.h_val - self.g_val + p.constant
    }

    /// `∇_i f(x)`.
    pub fn coord_grad(&self, p: &DcProblem, x: &[f64], i: usize) -> f64 {
        match &p.f {
            Smooth::Quadratic { .. } => p.coord_grad_f(x, i),
            Smooth::LeastSquares { g, .. } => g.col(i).dot(&self.fx),
            Smooth::ReluSquares { g } => {
                let mut s = 0.0;
                g.col(i).for_each(|j, a| s += a * self.fx[j].max(0.0));
                s
            }
        }
    }

    /// Component `i` of [`DcProblem::g_subgradient`], from cached products.
    pub fn g_subgradient_coord(&self, p: &DcProblem, x: &[f64], i: usize) -> f64 {
        let sign = |v: f64| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        };
        match &p.g {
            Concave::L1Compose(a) => {
                let mut s = 0.0;
                a.col(i).for_each(|j, v| s += v * sign(self.gx[j]));
                s
            }
            Concave::ReluCompose(a) => {
                let mut s = 0.0;
                a.col(i).for_each(|j, v| s += v * 0.5 * (1.0 + sign(self.gx[j])));
                s
            }
            Concave::L2Compose(a) => {
                let nrm = self.gx_sq.max(0.0).sqrt();
                if nrm == 0.0 {
                    0.0
                } else {
                    a.col(i).dot(&self.gx) / nrm
                }
            }
            Concave::LInfCompose(a) => {
                let mut best = 0;
                for (j, v) in self.gx.iter().enumerate() {
                    if v.abs() > self.gx[best].abs() {
                        best = j;
                    }
                }
                if self.gx.is_empty() {
                    0.0
                } else {
                    sign(self.gx[best]) * a.get(best, i)
                }
            }
            Concave::TopS { s, rho } => {
                let m = x[i].abs();
                let ahead = x.iter().enumerate().filter(|&(j, v)| v.abs() > m || (v.abs() == m && j < i)).count();
                if ahead < *s {
                    rho * sign(x[i])
                } else {
                    0.0
                }
            }
            Concave::ScaledNorm2 { rho } => {
                let nrm = self.x_sq.max(0.0).sqrt();
                if nrm == 0.0 {
                    0.0
                } else {
                    rho * x[i] / nrm
                }
            }
        }
    }

    /// Sets `x_i ← x_i + η` and updates every cached quantity.
    pub fn apply(&mut self, p: &DcProblem, x: &mut [f64], i: usize, eta: f64) {
        if eta == 0.0 {
            self.tick(p, x);
            return;
        }
        let old = x[i];
        let new = old + eta;
        match &p.f {
            Smooth::Quadratic { alpha, q, linear } => {
                let qi = match q {
                    None => old,
                    Some(q) => dot(q.row(i), x),
                };
                let qii = q.as_ref().map_or(1.0, |q| q.get(i, i));
                self.f_val += alpha * (eta * qi + 0.5 * qii * eta * eta) + linear.as_ref().map_or(0.0, |l| l[i] * eta);
            }
            Smooth::LeastSquares { g, .. } => {
                let col = g.col(i);
                self.f_val += eta * col.dot(&self.fx) + 0.5 * eta * eta * p.c[i];
                col.axpy(eta, &mut self.fx);
            }
            Smooth::ReluSquares { g } => {
                let mut delta = 0.0;
                let fx = &mut self.fx;
                g.col(i).for_each(|j, a| {
                    let u = fx[j];
                    let v = u + eta * a;
                    delta += 0.5 * (v.max(0.0).powi(2) - u.max(0.0).powi(2));
                    fx[j] = v;
                });
                self.f_val += delta;
            }
        }
        self.h_val += p.h.eval_scalar(new) - p.h.eval_scalar(old);
        self.x_sq += new * new - old * old;
        x[i] = new;
        match &p.g {
            Concave::L1Compose(a) | Concave::ReluCompose(a) => {
                let relu = matches!(p.g, Concave::ReluCompose(_));
                let gx = &mut self.gx;
                let mut delta = 0.0;
                a.col(i).for_each(|j, v| {
                    let u = gx[j];
                    let w = u + eta * v;
                    delta += if relu { w.max(0.0) - u.max(0.0) } else { w.abs() - u.abs() };
                    gx[j] = w;
                });
                self.g_val += delta;
            }
            Concave::L2Compose(a) => {
                let col = a.col(i);
                self.gx_sq += 2.0 * eta * col.dot(&self.gx) + eta * eta * col.norm_sq();
                col.axpy(eta, &mut self.gx);
                self.g_val = self.gx_sq.max(0.0).sqrt();
            }
            Concave::LInfCompose(a) => {
                a.col(i).axpy(eta, &mut self.gx);
                self.g_val = self.gx.iter().fold(0.0, |m, v| m.max(v.abs()));
            }
            Concave::TopS { s, rho } => self.g_val = rho * top_s_sum(x, *s),
            Concave::ScaledNorm2 { rho } => self.g_val = rho * self.x_sq.max(0.0).sqrt(),
        }
        self.tick(p, x);
    }

    fn tick(&mut self, p: &DcProblem, x: &[f64]) {
        self.since_refresh += 1;
        if self.since_refresh >= p.n() {
            self.refresh(p, x);
        }
    }
}

/// Global minimizer over `η` of
/// `(a/2)η² + bη + h_i(x_i + η) − g(x + ηe_i)` via the matching breakpoint
/// operator.
pub fn coordinate_prox(p: &DcProblem, x: &[f64], i: usize, a: f64, b: f64, cache: &mut Cache) -> Result<ProxResult> {
    let feasible: Interval = p.h.step_interval(x[i]);
    let q = ProxQuery::with_interval(a, b, feasible);
    let composed_ok = matches!(p.h, Separable::Zero | Separable::Box { .. });
    match (&p.g, composed_ok) {
        (Concave::L1Compose(m), true) | (Concave::ReluCompose(m), true) => {
            cache.scratch_g.clear();
            cache.scratch_d.clear();
            let (gs, ds, gx) = (&mut cache.scratch_g, &mut cache.scratch_d, &cache.gx);
            m.col(i).for_each(|j, v| {
                if v != 0.0 {
                    gs.push(v);
                    ds.push(gx[j]);
                }
            });
            if matches!(p.g, Concave::L1Compose(_)) {
                prox::prox_l1_compose(&q, &cache.scratch_g, &cache.scratch_d)
            } else {
                prox::prox_relu_compose(&q, &cache.scratch_g, &cache.scratch_d)
            }
        }
        (Concave::LInfCompose(m), true) => {
            cache.scratch_g.clear();
            cache.scratch_g.resize(m.rows(), 0.0);
            let gs = &mut cache.scratch_g;
            m.col(i).for_each(|j, v| gs[j] = v);
            prox::prox_linf_compose(&q, &cache.scratch_g, &cache.gx)
        }
        (Concave::L2Compose(m), true) => {
            let col = m.col(i);
            prox::prox_l2_moments(&q, col.norm_sq(), col.dot(&cache.gx), cache.gx_sq.max(0.0))
        }
        (Concave::ScaledNorm2 { rho }, true) => {
            let r2 = rho * rho;
            prox::prox_l2_moments(&q, r2, r2 * x[i], r2 * cache.x_sq.max(0.0))
        }
        (Concave::TopS { s, rho }, _) => {
            let rho_h = match p.h {
                Separable::L1 { rho } => rho,
                _ => 0.0,
            };
            let (without, with_i) = prox::top_s_excluding(x, i, *s);
            prox::prox_top_s_general(&q, x[i], without, with_i, rho_h, *rho)
        }
        _ => Err(Error::Unsupported(format!("no exact coordinate step for h = {:?} with this g", p.h))),
    }
}

/// CD-SNCA step: global minimizer of the nonconvex model
/// `∇_i f·η + ((c_i+θ)/2)η² + h_i(x_i+η) − g(x+ηe_i)`.
pub fn cd_step_snca(p: &DcProblem, x: &[f64], i: usize, theta: f64, cache: &mut Cache) -> Result<f64> {
    let b = cache.coord_grad(p, x, i);
    Ok(coordinate_prox(p, x, i, p.c[i] + theta, b, cache)?.eta)
}

/// CD-SCA step: minimizer of the convex model with `g` linearized at `x`.
pub fn cd_step_sca(p: &DcProblem, x: &[f64], i: usize, theta: f64, cache: &mut Cache) -> Result<f64> {
    let b = cache.coord_grad(p, x, i) - cache.g_subgradient_coord(p, x, i);
    Ok(prox::prox_convex_sca(p.c[i] + theta, b, p.h, x[i])?.eta)
}
