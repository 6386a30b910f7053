use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cd_step_sca, cd_step_snca};
use super::{relative_decrease, Cache, Rule, Sample, SolverConfig, StopReason, StopWindow, Trace};
use crate::problem::DcProblem;
use crate::prox::{soft_threshold, Separable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Nonconvex model, solved globally.
    Snca,
    /// Convex model with `g` linearized.
    Sca,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Snca => "cd-snca",
            Variant::Sca => "cd-sca",
        }
    }
}

/// Outcome of one coordinate update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub i: usize,
    pub eta: f64,
    pub f_before: f64,
    pub f_after: f64,
}

/// `d = argmin h(x+d) + (L/2)‖d‖² + ⟨∇f(x) − s, d⟩` with `s` the selected
/// subgradient of `g`, solved coordinatewise.
pub fn surrogate_direction(p: &DcProblem, x: &[f64]) -> Vec<f64> {
    let gf = p.grad_f(x);
    let sg = p.g_subgradient(x);
    let l = p.lipschitz;
    x.iter()
        .enumerate()
        .map(|(j, &xj)| {
            let v = gf[j] - sg[j];
            match p.h {
                Separable::Zero => -v / l,
                Separable::L1 { rho } => soft_threshold(xj - v / l, rho / l) - xj,
                Separable::Box { lo, hi } => (xj - v / l).max(lo).min(hi) - xj,
            }
        })
        .collect()
}

/// Greedy index `argmax_j |d_j|` (lowest index on ties) and `‖d‖∞`.
pub fn select_greedy(p: &DcProblem, x: &[f64]) -> (usize, f64) {
    let d = surrogate_direction(p, x);
    let mut best = 0;
    for (j, v) in d.iter().enumerate() {
        if v.abs() > d[best].abs() {
            best = j;
        }
    }
    (best, d.get(best).map_or(0.0, |v| v.abs()))
}

/// Algorithm state for coordinate descent, advanced one update at a time.
pub struct CoordinateDescent<'a> {
    problem: &'a DcProblem,
    theta: f64,
    rule: Rule,
    variant: Variant,
    x: Vec<f64>,
    cache: Cache,
    rng: ChaCha8Rng,
    iter: u64,
    f: f64,
    min_c: f64,
}

impl<'a> CoordinateDescent<'a> {
    /// Starts from `x0`, projected into the box when `h` is one.
    pub fn new(problem: &'a DcProblem, config: &SolverConfig, x0: &[f64], variant: Variant) -> Result<Self> {
        config.validate()?;
        if x0.len() != problem.n() {
            return Err(Error::Invalid(format!("x0 has length {}, expected {}", x0.len(), problem.n())));
        }
        let mut x = x0.to_vec();
        problem.project(&mut x);
        let cache = Cache::new(problem, &x);
        let f = cache.objective(problem);
        if !f.is_finite() {
            return Err(Error::Numerical(format!("F(x0) = {f}")));
        }
        let seed = match config.rule {
            Rule::Random { seed } => seed,
            _ => 0,
        };
        let min_c = problem.c.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        Ok(Self {
            problem,
            theta: config.theta,
            rule: config.rule,
            variant,
            x,
            cache,
            rng: ChaCha8Rng::seed_from_u64(seed),
            iter: 0,
            f,
            min_c,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Current objective, from the cache.
    pub fn objective(&self) -> f64 {
        self.f
    }

    pub fn iterations(&self) -> u64 {
        self.iter
    }

    fn next_index(&mut self) -> usize {
        let n = self.problem.n();
        match self.rule {
            Rule::Random { .. } => self.rng.random_range(0..n),
            Rule::Cyclic => (self.iter % n as u64) as usize,
            Rule::Greedy => select_greedy(self.problem, &self.x).0,
        }
    }

    /// One coordinate update on the index chosen by the rule.
    pub fn step(&mut self) -> Result<StepInfo> {
        let i = self.next_index();
        self.step_at(i)
    }

    /// One coordinate update on coordinate `i`.
    pub fn step_at(&mut self, i: usize) -> Result<StepInfo> {
        let p = self.problem;
        let eta = match self.variant {
            Variant::Snca => cd_step_snca(p, &self.x, i, self.theta, &mut self.cache)?,
            Variant::Sca => cd_step_sca(p, &self.x, i, self.theta, &mut self.cache)?,
        };
        if !eta.is_finite() {
            return Err(Error::Numerical(format!("step on coordinate {i} is {eta}")));
        }
        let before = self.f;
        self.cache.apply(p, &mut self.x, i, eta);
        self.iter += 1;
        let after = self.cache.objective(p);
        if !after.is_finite() {
            return Err(Error::Numerical(format!("F = {after} after updating coordinate {i}")));
        }
        if cfg!(debug_assertions) {
            let curv = match self.variant {
                Variant::Snca => self.theta,
                Variant::Sca => self.min_c + 2.0 * self.theta,
            };
            let slack = 1e-9 + 1e-12 * before.abs();
            debug_assert!(
                after - before <= -0.5 * curv * eta * eta + slack,
                "insufficient decrease at coordinate {i}: {before} -> {after}, eta = {eta}"
            );
        }
        self.f = after;
        Ok(StepInfo { i, eta, f_before: before, f_after: after })
    }

    pub fn into_parts(self) -> (Vec<f64>, f64, u64) {
        (self.x, self.f, self.iter)
    }
}

/// Runs coordinate descent until the stopping rule, the time budget or the
/// epoch cap.
pub fn run_cd(problem: &DcProblem, config: &SolverConfig, x0: &[f64], variant: Variant) -> Result<Trace> {
    let start = Instant::now();
    let mut cd = CoordinateDescent::new(problem, config, x0, variant)?;
    let n = problem.n() as u64;
    let every = if config.record_every == 0 { n } else { config.record_every as u64 };
    let max_iter = (config.max_epochs as u64).saturating_mul(n);
    let mut window = StopWindow::new(config.eps, config.window);
    let mut samples = vec![Sample { iter: 0, epoch: 0.0, seconds: 0.0, f: cd.objective() }];
    let stop_reason = loop {
        if cd.iterations() >= max_iter {
            break StopReason::MaxEpochs;
        }
        if let Some(budget) = config.time_budget_s {
            if start.elapsed().as_secs_f64() >= budget {
                break StopReason::Time;
            }
        }
        let info = cd.step()?;
        let t = cd.iterations();
        let converged = window.push(relative_decrease(info.f_before, info.f_after));
        if t % every == 0 || converged {
            samples.push(Sample {
                iter: t,
                epoch: t as f64 / n as f64,
                seconds: start.elapsed().as_secs_f64(),
                f: info.f_after,
            });
        }
        if converged {
            break StopReason::Converged;
        }
    };
    let (x, _, iters) = cd.into_parts();
    let final_f = problem.evaluate(&x);
    if samples.last().map(|s| s.iter) != Some(iters) {
        samples.push(Sample {
            iter: iters,
            epoch: iters as f64 / n as f64,
            seconds: start.elapsed().as_secs_f64(),
            f: final_f,
        });
    }
    Ok(Trace { solver: variant.name().into(), samples, final_x: x, final_f, iterations: iters, stop_reason })
}
