#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn vec_uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, lo, hi)).collect()
}

/// Minimum of `p` over the grid `k·step` inside `[lo, hi]`, plus the finite
/// ends of the interval.
pub fn grid_min(p: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let k0 = (lo / step).ceil() as i64;
    let k1 = (hi / step).floor() as i64;
    let mut best = (f64::NAN, f64::INFINITY);
    for k in k0..=k1 {
        let e = k as f64 * step;
        let v = p(e);
        if v < best.1 {
            best = (e, v);
        }
    }
    for e in [lo, hi] {
        let v = p(e);
        if v < best.1 {
            best = (e, v);
        }
    }
    best
}

/// Grid range for a subproblem with quadratic coefficient `a`, linear
/// coefficient `b` and a nonconvex part that is `lip`-Lipschitz in `η`:
/// outside `|η| ≤ 2(|b| + lip)/a` the objective exceeds its value at 0.
pub fn grid_range(a: f64, b: f64, lip: f64, lo: f64, hi: f64) -> (f64, f64) {
    let r = 2.0 * (b.abs() + lip) / a + 1e-3;
    (lo.max(-50.0).max(-r), hi.min(50.0).min(r))
}
