//! Coordinate descent (nonconvex and convex subproblem variants) and the
//! full-gradient baselines, sharing one configuration, trace format and
//! stopping rule.

mod baseline;
mod cache;
mod cd;

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use baseline::{prox_h, run_baseline, Baseline};
pub use cache::{cd_step_sca, cd_step_snca, coordinate_prox, Cache};
pub use cd::{run_cd, select_greedy, surrogate_direction, CoordinateDescent, StepInfo, Variant};

/// Coordinate selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    Random { seed: u64 },
    Cyclic,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Proximal parameter `θ > 0`.
    pub theta: f64,
    pub rule: Rule,
    /// Tolerance on the windowed mean of relative decreases.
    pub eps: f64,
    /// Window length `v`.
    pub window: usize,
    /// Wall-clock budget in seconds; `None` disables it.
    pub time_budget_s: Option<f64>,
    /// Work cap, in epochs of `n` coordinate updates.
    pub max_epochs: usize,
    /// Iterations between trace samples; 0 samples once per epoch.
    pub record_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            theta: 1e-6,
            rule: Rule::Random { seed: 0 },
            eps: 1e-10,
            window: 500,
            time_budget_s: Some(60.0),
            max_epochs: 100_000,
            record_every: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.theta > 0.0) {
            return Err(crate::Error::Invalid(format!("theta = {} must be positive", self.theta)));
        }
        if self.window == 0 {
            return Err(crate::Error::Invalid("window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    Time,
    MaxEpochs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub iter: u64,
    pub epoch: f64,
    pub seconds: f64,
    #[serde(rename = "F")]
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub solver: String,
    pub samples: Vec<Sample>,
    pub final_x: Vec<f64>,
    pub final_f: f64,
    pub iterations: u64,
    pub stop_reason: StopReason,
}

/// The JSON summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub solver: String,
    #[serde(rename = "final_F")]
    pub final_f: f64,
    pub iters: u64,
    pub stop_reason: StopReason,
    pub seed: u64,
}

impl Trace {
    pub fn summary(&self, seed: u64) -> RunSummary {
        RunSummary {
            solver: self.solver.clone(),
            final_f: self.final_f,
            iters: self.iterations,
            stop_reason: self.stop_reason,
            seed,
        }
    }

    /// Writes `iter,epoch,seconds,F`. With `timing = false` the seconds
    /// column is written as 0 so that output depends only on the inputs.
    pub fn write_csv<W: Write>(&self, mut w: W, timing: bool) -> std::io::Result<()> {
        writeln!(w, "iter,epoch,seconds,F")?;
        for s in &self.samples {
            let secs = if timing { s.seconds } else { 0.0 };
            writeln!(w, "{},{:?},{:?},{:?}", s.iter, s.epoch, secs, s.f)?;
        }
        Ok(())
    }
}

/// Relative decrease `z = (F_t − F_{t+1}) / max(|F_t|, 1e-12)`.
#[inline]
pub fn relative_decrease(before: f64, after: f64) -> f64 {
    (before - after) / before.abs().max(1e-12)
}

/// True iff the mean of the last `min(len, window)` entries is at most `eps`.
/// An empty tail is never converged.
pub fn check_stop(tail: &[f64], eps: f64, window: usize) -> bool {
    let k = tail.len().min(window.max(1));
    if k == 0 {
        return false;
    }
    let s: f64 = tail[tail.len() - k..].iter().sum();
    s / k as f64 <= eps
}

/// Streaming form of [`check_stop`].
#[derive(Debug, Clone)]
pub struct StopWindow {
    buf: VecDeque<f64>,
    window: usize,
    eps: f64,
    sum: f64,
    pushes: usize,
}

impl StopWindow {
    pub fn new(eps: f64, window: usize) -> Self {
        Self { buf: VecDeque::with_capacity(window.max(1)), window: window.max(1), eps, sum: 0.0, pushes: 0 }
    }

    /// Records `z` and reports whether the stopping rule fires.
    pub fn push(&mut self, z: f64) -> bool {
        if self.buf.len() == self.window {
            self.sum -= self.buf.pop_front().unwrap_or(0.0);
        }
        self.buf.push_back(z);
        self.sum += z;
        self.pushes += 1;
        // resum periodically so cancellation does not accumulate
        if self.pushes % self.window == 0 {
            self.sum = self.buf.iter().sum();
        }
        self.sum / self.buf.len() as f64 <= self.eps
    }
}
