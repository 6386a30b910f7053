//! Exact global minimizers of the one-dimensional subproblem
//!
//! ```text
//! p(η) = (a/2)η² + bη + h_i(x_i + η) − g(x + η e_i),   η ∈ [lo, hi]
//! ```
//!
//! for each `g` used by the applications. Every operator builds a finite
//! candidate set that provably contains a global minimizer, evaluates `p` at
//! the candidates and keeps the best one. `η = 0` and finite interval ends are
//! always candidates. Values within `1e-12` of each other are ties, resolved
//! toward the smallest `|η|` and then the smallest `η`.

use dccd_linalg::real_root_candidates;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const TIE_TOL: f64 = 1e-12;

/// Closed interval `[lo, hi]`, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Invalid(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lo).min(self.hi)
    }
}

/// The separable convex term `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Separable {
    Zero,
    /// `ρ‖x‖₁`
    L1 {
        rho: f64,
    },
    /// Indicator of `lo ≤ x_i ≤ hi` for every `i`.
    Box {
        lo: f64,
        hi: f64,
    },
}

impl Separable {
    /// `h_i(v)`; `+∞` outside a box.
    #[inline]
    pub fn eval_scalar(&self, v: f64) -> f64 {
        match *self {
            Separable::Zero => 0.0,
            Separable::L1 { rho } => rho * v.abs(),
            Separable::Box { lo, hi } => {
                if lo <= v && v <= hi {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Step interval keeping `x_i + η` feasible.
    pub fn step_interval(&self, x_i: f64) -> Interval {
        match *self {
            Separable::Box { lo, hi } => Interval { lo: lo - x_i, hi: hi - x_i },
            _ => Interval::REAL,
        }
    }
}

/// The quadratic part of the subproblem and the feasible step interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxQuery {
    pub a: f64,
    pub b: f64,
    pub feasible: Interval,
}

impl ProxQuery {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b, feasible: Interval::REAL }
    }

    pub fn with_interval(a: f64, b: f64, feasible: Interval) -> Self {
        Self { a, b, feasible }
    }

    fn check(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite()) || self.a < 0.0 {
            return Err(Error::Invalid(format!("bad query a = {}, b = {}", self.a, self.b)));
        }
        if self.a == 0.0 && !self.feasible.is_bounded() {
            return Err(Error::NonCoercive);
        }
        if !(self.feasible.lo <= 0.0 && 0.0 <= self.feasible.hi) {
            return Err(Error::Invalid("feasible interval must contain 0".into()));
        }
        Ok(())
    }

    #[inline]
    fn quad(&self, eta: f64) -> f64 {
        0.5 * self.a * eta * eta + self.b * eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxResult {
    pub eta: f64,
    pub value: f64,
    pub candidates_evaluated: usize,
}

#[inline]
fn prefer(eta: f64, value: f64, best_eta: f64, best_value: f64) -> bool {
    if value < best_value - TIE_TOL {
        return true;
    }
    if value <= best_value + TIE_TOL {
        let (ka, kb) = (eta.abs(), best_eta.abs());
        return ka < kb || (ka == kb && eta < best_eta);
    }
    false
}

/// Running argmin with the tie rule.
struct Picker {
    eta: f64,
    value: f64,
    count: usize,
}

impl Picker {
    fn new() -> Self {
        Self { eta: f64::NAN, value: f64::INFINITY, count: 0 }
    }

    #[inline]
    fn offer(&mut self, eta: f64, value: f64) {
        self.count += 1;
        if self.eta.is_nan() || prefer(eta, value, self.eta, self.value) {
            self.eta = eta;
            self.value = value;
        }
    }

    fn finish(self) -> ProxResult {
        ProxResult { eta: self.eta, value: self.value, candidates_evaluated: self.count }
    }
}

/// Evaluates `p` at every candidate (after clamping), plus `0` and finite
/// interval ends.
fn pick<I, F>(q: &ProxQuery, candidates: I, p: F) -> ProxResult
where
    I: IntoIterator<Item = f64>,
    F: Fn(f64) -> f64,
{
    let mut pk = Picker::new();
    pk.offer(0.0, p(0.0));
    for end in [q.feasible.lo, q.feasible.hi] {
        if end.is_finite() {
            pk.offer(end, p(end));
        }
    }
    for c in candidates {
        if c.is_finite() {
            let c = q.feasible.clamp(c);
            pk.offer(c, p(c));
        }
    }
    pk.finish()
}

/// Minimizes `(a/2)η² + bη − w‖gη + d‖₁` by sweeping the sorted kinks
/// `−d_j/g_j`. On each piece between consecutive kinks the sign pattern is
/// fixed, so `p` is a quadratic whose clamped stationary point
/// `(w⟨σ, g⟩ − b)/a` is the piece's minimizer. Shortlisted candidates are
/// then re-evaluated directly.
fn l1_sweep(q: &ProxQuery, w: f64, g: &[f64], d: &[f64]) -> Result<ProxResult> {
    q.check()?;
    if g.len() != d.len() {
        return Err(Error::Invalid("g and d lengths differ".into()));
    }
    let mut kinks: Vec<(f64, usize)> = Vec::with_capacity(g.len());
    // slope and offset of Σ|g_j η + d_j| left of every kink
    let mut s = 0.0;
    let mut off = 0.0;
    for (j, (&gj, &dj)) in g.iter().zip(d).enumerate() {
        if gj != 0.0 {
            kinks.push((-dj / gj, j));
            s -= gj.abs();
            off -= gj.signum() * dj;
        } else {
            off += dj.abs();
        }
    }
    kinks.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let exact = |eta: f64| q.quad(eta) - w * g.iter().zip(d).map(|(gj, dj)| (gj * eta + dj).abs()).sum::<f64>();
    let piece = |eta: f64, s: f64, off: f64| q.quad(eta) - w * (s * eta + off);

    let mut approx: Vec<(f64, f64)> = Vec::with_capacity(2 * kinks.len() + 4);
    let mut left = f64::NEG_INFINITY;
    for k in 0..=kinks.len() {
        let right = kinks.get(k).map_or(f64::INFINITY, |t| t.0);
        let lo = left.max(q.feasible.lo);
        let hi = right.min(q.feasible.hi);
        if lo <= hi {
            if q.a > 0.0 {
                let eta = ((w * s - q.b) / q.a).max(lo).min(hi);
                approx.push((eta, piece(eta, s, off)));
            } else {
                for e in [lo, hi] {
                    if e.is_finite() {
                        approx.push((e, piece(e, s, off)));
                    }
                }
            }
        }
        if let Some(&(_, j)) = kinks.get(k) {
            s += 2.0 * g[j].abs();
            off += 2.0 * g[j].signum() * d[j];
        }
        left = right;
    }
    let best = approx.iter().fold(exact(0.0), |m, c| m.min(c.1));
    let band = 1e-9 * (1.0 + best.abs());
    let shortlist = approx.iter().filter(|c| c.1 <= best + band).map(|c| c.0);
    let mut r = pick(q, shortlist, exact);
    r.candidates_evaluated = approx.len() + 1;
    Ok(r)
}

/// `p(η) = (a/2)η² + bη − ‖gη + d‖₁`.
pub fn prox_l1_compose(q: &ProxQuery, g: &[f64], d: &[f64]) -> Result<ProxResult> {
    l1_sweep(q, 1.0, g, d)
}

/// `p(η) = (a/2)η² + bη − Σ max(0, g_jη + d_j)`, through the identity
/// `max(0, t) = (t + |t|)/2`. The reported value is for this objective.
pub fn prox_relu_compose(q: &ProxQuery, g: &[f64], d: &[f64]) -> Result<ProxResult> {
    let shifted = ProxQuery { b: q.b - 0.5 * g.iter().sum::<f64>(), ..*q };
    let mut r = l1_sweep(&shifted, 0.5, g, d)?;
    r.value = q.quad(r.eta) - g.iter().zip(d).map(|(gj, dj)| (gj * r.eta + dj).max(0.0)).sum::<f64>();
    Ok(r)
}

/// `p(η) = (a/2)η² + bη − ‖gη + d‖∞`; candidates `(±g_j − b)/a`.
pub fn prox_linf_compose(q: &ProxQuery, g: &[f64], d: &[f64]) -> Result<ProxResult> {
    q.check()?;
    if g.len() != d.len() {
        return Err(Error::Invalid("g and d lengths differ".into()));
    }
    let p = |eta: f64| q.quad(eta) - g.iter().zip(d).fold(0.0f64, |m, (gj, dj)| m.max((gj * eta + dj).abs()));
    if q.a == 0.0 {
        return Ok(pick(q, std::iter::empty(), p));
    }
    let cands = g.iter().flat_map(|&gj| [(gj - q.b) / q.a, (-gj - q.b) / q.a]);
    Ok(pick(q, cands, p))
}

/// `p(η) = (a/2)η² + bη − ‖gη + d‖₂`.
pub fn prox_l2_compose(q: &ProxQuery, g: &[f64], d: &[f64]) -> Result<ProxResult> {
    if g.len() != d.len() {
        return Err(Error::Invalid("g and d lengths differ".into()));
    }
    let gg: f64 = g.iter().map(|v| v * v).sum();
    let gd: f64 = g.iter().zip(d).map(|(a, b)| a * b).sum();
    let dd: f64 = d.iter().map(|v| v * v).sum();
    prox_l2_moments(q, gg, gd, dd)
}

/// [`prox_l2_compose`] from the moments `‖g‖²`, `⟨g, d⟩`, `‖d‖²`, so that
/// `‖gη + d‖² = gg·η² + 2gd·η + dd`.
///
/// Stationary points of the smooth part solve
/// `‖gη+d‖²(aη+b)² = ⟨g, gη+d⟩²`, a quartic whose real roots are candidates
/// along with the kink where `gη + d = 0` when `d ∥ g`.
pub fn prox_l2_moments(q: &ProxQuery, gg: f64, gd: f64, dd: f64) -> Result<ProxResult> {
    q.check()?;
    let (a, b) = (q.a, q.b);
    let p = |eta: f64| q.quad(eta) - (gg * eta * eta + 2.0 * gd * eta + dd).max(0.0).sqrt();
    if gg == 0.0 {
        let c = if a > 0.0 { vec![-b / a] } else { vec![] };
        return Ok(pick(q, c, p));
    }
    let mut cands = real_root_candidates(&l2_quartic(a, b, gg, gd, dd));
    let (ng, nd) = (gg.sqrt(), dd.sqrt());
    if ng * nd - gd.abs() <= 1e-12 * ng * nd {
        cands.push(-gd / gg);
    }
    let mut r = pick(q, cands.iter().copied(), p);
    // Newton on p' inside a smooth piece recovers digits lost to the
    // squared formulation
    let dp = |eta: f64| {
        let s = gg * eta * eta + 2.0 * gd * eta + dd;
        let u = gg * eta + gd;
        (a * eta + b - u / s.sqrt(), a - (gg * s - u * u) / (s * s.sqrt()))
    };
    let mut eta = r.eta;
    let mut val = r.value;
    for _ in 0..8 {
        if gg * eta * eta + 2.0 * gd * eta + dd <= 1e-300 {
            break;
        }
        let (d1, d2) = dp(eta);
        if d1 == 0.0 || d2 <= 0.0 || !d1.is_finite() || !d2.is_finite() {
            break;
        }
        let next = q.feasible.clamp(eta - d1 / d2);
        let nv = p(next);
        if nv <= val && next != eta {
            eta = next;
            val = nv;
        } else {
            break;
        }
    }
    if val < r.value - TIE_TOL {
        r.eta = eta;
        r.value = val;
    }
    Ok(r)
}

/// Sums of the `s` and `s−1` largest magnitudes among `x_j, j ≠ i`. The first
/// is `None` when `s = n` (no `s`-subset avoids `i`).
pub fn top_s_excluding(x: &[f64], i: usize, s: usize) -> (Option<f64>, f64) {
    let mut mags: Vec<f64> = x.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v.abs()).collect();
    let k = mags.len();
    let sum_top = |count: usize, mags: &mut Vec<f64>| -> f64 {
        if count == 0 {
            return 0.0;
        }
        if count >= mags.len() {
            return mags.iter().sum();
        }
        mags.select_nth_unstable_by(count - 1, |a, b| b.total_cmp(a));
        mags[..count].iter().sum()
    };
    let without = if s <= k { Some(sum_top(s, &mut mags)) } else { None };
    let with_i = sum_top(s - 1, &mut mags);
    (without, with_i)
}

/// `p(η) = (a/2)η² + bη + ρ|x_i+η| − ρ·T_s(x + ηe_i)` where `T_s` sums the
/// `s` largest magnitudes. Candidates are `−b/a`, `−x_i`, `(±ρ − b)/a`.
pub fn prox_top_s(q: &ProxQuery, i: usize, x: &[f64], s: usize, rho: f64) -> Result<ProxResult> {
    if s == 0 || s > x.len() || i >= x.len() {
        return Err(Error::Invalid(format!("top-s with s = {s}, i = {i}, n = {}", x.len())));
    }
    let (without, with_i) = top_s_excluding(x, i, s);
    prox_top_s_parts(q, x[i], without, with_i, rho)
}

/// [`prox_top_s`] given the two partial sums from [`top_s_excluding`]; the
/// top-`s` sum of `x + ηe_i` is `max(without, with_i + |x_i + η|)`.
pub fn prox_top_s_parts(q: &ProxQuery, x_i: f64, without: Option<f64>, with_i: f64, rho: f64) -> Result<ProxResult> {
    prox_top_s_general(q, x_i, without, with_i, rho, rho)
}

/// Top-`s` step with separate weights: `ρ_h|x_i+η| − ρ_g·T_s(x + ηe_i)`.
///
/// `p` is the pointwise minimum of two functions of `|x_i + η|` with fixed
/// coefficients, so the stationary points of each linear branch plus the
/// kink `−x_i` cover every global minimizer.
pub fn prox_top_s_general(
    q: &ProxQuery,
    x_i: f64,
    without: Option<f64>,
    with_i: f64,
    rho_h: f64,
    rho_g: f64,
) -> Result<ProxResult> {
    q.check()?;
    let p = |eta: f64| {
        let m = (x_i + eta).abs();
        let top = without.map_or(with_i + m, |w| w.max(with_i + m));
        q.quad(eta) + rho_h * m - rho_g * top
    };
    if q.a == 0.0 {
        return Ok(pick(q, [-x_i], p));
    }
    let (a, b) = (q.a, q.b);
    let k = rho_h - rho_g;
    Ok(pick(q, [-b / a, -x_i, (-rho_h - b) / a, (rho_h - b) / a, (-k - b) / a, (k - b) / a], p))
}

/// Minimizer of the convex model `(a/2)η² + b_eff·η + h_i(x_i + η)`.
pub fn prox_convex_sca(a: f64, b_eff: f64, h: Separable, x_i: f64) -> Result<ProxResult> {
    if !(a > 0.0) || !b_eff.is_finite() {
        return Err(Error::Invalid(format!("convex prox needs a > 0 (a = {a}, b = {b_eff})")));
    }
    let eta = match h {
        Separable::Zero => -b_eff / a,
        Separable::L1 { rho } => soft_threshold(x_i - b_eff / a, rho / a) - x_i,
        Separable::Box { lo, hi } => (x_i - b_eff / a).max(lo).min(hi) - x_i,
    };
    let value = 0.5 * a * eta * eta + b_eff * eta + h.eval_scalar(x_i + eta);
    Ok(ProxResult { eta, value, candidates_evaluated: 1 })
}

#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Coefficients, highest degree first, of
/// `(gg·η² + 2gd·η + dd)(aη + b)² − (gg·η + gd)²`.
pub fn l2_quartic(a: f64, b: f64, gg: f64, gd: f64, dd: f64) -> [f64; 5] {
    [
        gg * a * a,
        2.0 * gg * a * b + 2.0 * gd * a * a,
        gg * b * b + 4.0 * gd * a * b + dd * a * a - gg * gg,
        2.0 * gd * b * b + 2.0 * dd * a * b - 2.0 * gg * gd,
        dd * b * b - gd * gd,
    ]
}
