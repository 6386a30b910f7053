use std::time::Instant;

use dccd_linalg::{matvec, matvec_t, norm, ColumnMatrix};
use serde::{Deserialize, Serialize};

use super::{relative_decrease, Sample, SolverConfig, StopReason, StopWindow, Trace};
use crate::problem::{Concave, DcProblem, Smooth};
use crate::prox::{soft_threshold, Separable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Multi-stage convex relaxation, inner accelerated proximal gradient.
    Mscr,
    /// Proximal DC algorithm: one prox-gradient step per linearization.
    Pdca,
    /// Projected subgradient with step `0.1/t`.
    Subgrad,
    /// Sign power iteration on the dual of ℓ₁-PCA.
    TdualL1pca,
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Mscr => "mscr",
            Baseline::Pdca => "pdca",
            Baseline::Subgrad => "subgrad",
            Baseline::TdualL1pca => "tdual_l1pca",
        }
    }
}

const INNER_TOL: f64 = 1e-8;
const INNER_MAX: usize = 500;

/// `prox_{h/L}(v)`.
pub fn prox_h(h: Separable, v: &[f64], l: f64) -> Vec<f64> {
    match h {
        Separable::Zero => v.to_vec(),
        Separable::L1 { rho } => v.iter().map(|&z| soft_threshold(z, rho / l)).collect(),
        Separable::Box { lo, hi } => v.iter().map(|&z| z.max(lo).min(hi)).collect(),
    }
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

fn tdual_matrix(p: &DcProblem) -> Result<(&ColumnMatrix, f64)> {
    match (&p.f, &p.h, &p.g) {
        (Smooth::Quadratic { alpha, q: None, linear: None }, Separable::Zero, Concave::L1Compose(a)) => Ok((a, *alpha)),
        _ => Err(Error::Unsupported("tdual applies only to min (a/2)|x|^2 - |Gx|_1".into())),
    }
}

/// Minimizes `f(x) + h(x) − ⟨s, x⟩` from `x` by accelerated proximal
/// gradient; returns the iterate and the number of gradient evaluations.
fn convex_subproblem(p: &DcProblem, s: &[f64], x: &[f64]) -> (Vec<f64>, usize) {
    let l = p.lipschitz;
    let mut xk = x.to_vec();
    let mut y = x.to_vec();
    let mut t = 1.0f64;
    for k in 1..=INNER_MAX {
        let gr = p.grad_f(&y);
        let v: Vec<f64> = y.iter().zip(gr.iter().zip(s)).map(|(yi, (gi, si))| yi - (gi - si) / l).collect();
        let next = prox_h(p.h, &v, l);
        let diff: f64 = next.iter().zip(&xk).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = next.iter().zip(&xk).map(|(a, b)| a + beta * (a - b)).collect();
        let done = diff <= INNER_TOL * (1.0 + norm(&next));
        xk = next;
        t = t_next;
        if done {
            return (xk, k);
        }
    }
    (xk, INNER_MAX)
}

/// Runs a baseline under the shared stopping rule. Each full-vector update
/// counts as `n` iterations.
pub fn run_baseline(problem: &DcProblem, kind: Baseline, config: &SolverConfig, x0: &[f64]) -> Result<Trace> {
    config.validate()?;
    let n = problem.n();
    if x0.len() != n {
        return Err(Error::Invalid(format!("x0 has length {}, expected {n}", x0.len())));
    }
    let tdual = if kind == Baseline::TdualL1pca { Some(tdual_matrix(problem)?) } else { None };
    let start = Instant::now();
    let mut x = x0.to_vec();
    problem.project(&mut x);
    let mut f = problem.evaluate(&x);
    if !f.is_finite() {
        return Err(Error::Numerical(format!("F(x0) = {f}")));
    }
    let mut dual: Option<Vec<f64>> =
        tdual.map(|(a, _)| matvec(a, &x).expect("dimension").into_iter().map(sign).collect());
    let n64 = n as u64;
    let max_iter = (config.max_epochs as u64).saturating_mul(n64);
    let mut iters: u64 = 0;
    let mut outer: u64 = 0;
    let mut window = StopWindow::new(config.eps, config.window);
    let mut samples = vec![Sample { iter: 0, epoch: 0.0, seconds: 0.0, f }];
    let every = config.record_every as u64;
    let mut last_sample = 0u64;
    let stop_reason = loop {
        if iters >= max_iter {
            break StopReason::MaxEpochs;
        }
        if let Some(budget) = config.time_budget_s {
            if start.elapsed().as_secs_f64() >= budget {
                break StopReason::Time;
            }
        }
        outer += 1;
        let (next, work) = match kind {
            Baseline::Mscr => {
                let s = problem.g_subgradient(&x);
                convex_subproblem(problem, &s, &x)
            }
            Baseline::Pdca => {
                let s = problem.g_subgradient(&x);
                let gr = problem.grad_f(&x);
                let l = problem.lipschitz;
                let v: Vec<f64> = x.iter().zip(gr.iter().zip(&s)).map(|(xi, (gi, si))| xi - (gi - si) / l).collect();
                (prox_h(problem.h, &v, l), 1)
            }
            Baseline::Subgrad => {
                let s = problem.g_subgradient(&x);
                let gr = problem.grad_f(&x);
                let step = 0.1 / outer as f64;
                let mut v: Vec<f64> = x
                    .iter()
                    .zip(gr.iter().zip(&s))
                    .map(|(&xi, (gi, si))| {
                        let dh = match problem.h {
                            Separable::L1 { rho } => rho * sign(xi),
                            _ => 0.0,
                        };
                        xi - step * (gi + dh - si)
                    })
                    .collect();
                problem.project(&mut v);
                (v, 1)
            }
            Baseline::TdualL1pca => {
                let (a, alpha) = tdual.expect("checked above");
                let y = dual.as_mut().expect("initialized");
                let gty = matvec_t(a, y).expect("dimension");
                *y = matvec(a, &gty).expect("dimension").into_iter().map(sign).collect();
                let gty = matvec_t(a, y).expect("dimension");
                (gty.into_iter().map(|v| v / alpha).collect(), 1)
            }
        };
        iters += work as u64 * n64;
        let f_next = problem.evaluate(&next);
        if !f_next.is_finite() || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("{} produced F = {f_next} at outer iteration {outer}", kind.name())));
        }
        let converged = window.push(relative_decrease(f, f_next));
        x = next;
        f = f_next;
        if every == 0 || iters - last_sample >= every || converged {
            last_sample = iters;
            samples.push(Sample {
                iter: iters,
                epoch: iters as f64 / n as f64,
                seconds: start.elapsed().as_secs_f64(),
                f,
            });
        }
        if converged {
            break StopReason::Converged;
        }
    };
    if samples.last().map(|s| s.iter) != Some(iters) {
        samples.push(Sample { iter: iters, epoch: iters as f64 / n as f64, seconds: start.elapsed().as_secs_f64(), f });
    }
    Ok(Trace { solver: kind.name().into(), samples, final_x: x, final_f: f, iterations: iters, stop_reason })
}
