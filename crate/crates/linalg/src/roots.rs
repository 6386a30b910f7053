use num_complex::Complex64;

use crate::{LinalgError, Result};

/// Horner evaluation; `coeffs` are ordered from the highest degree down.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_deriv_eval(coeffs: &[f64], x: f64) -> f64 {
    let deg = coeffs.len().saturating_sub(1);
    coeffs[..deg].iter().enumerate().fold(0.0, |acc, (k, &c)| acc * x + c * (deg - k) as f64)
}

/// Divides by the largest magnitude and drops negligible leading terms.
fn normalize(coeffs: &[f64]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Vec::new();
    }
    let c: Vec<f64> = coeffs.iter().map(|v| v / scale).collect();
    let first = c.iter().position(|v| v.abs() > 1e-15).unwrap_or(c.len());
    c[first..].to_vec()
}

/// All complex roots of a polynomial given highest degree first, by
/// Durand–Kerner iteration on the normalized monic form.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let c = normalize(coeffs);
    if c.len() < 2 {
        return Vec::new();
    }
    let deg = c.len() - 1;
    let lead = c[0];
    let monic: Vec<f64> = c.iter().map(|v| v / lead).collect();
    if deg == 1 {
        return vec![Complex64::new(-monic[1], 0.0)];
    }
    // Cauchy bound for the starting circle
    let radius = 1.0 + monic[1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let angle = Complex64::new(0.4, 0.9).arg();
    let mut z: Vec<Complex64> = (0..deg).map(|k| Complex64::from_polar(radius, angle * k as f64 + 0.25)).collect();
    let eval = |x: Complex64| monic.iter().fold(Complex64::new(0.0, 0.0), |acc, &cf| acc * x + cf);
    // rounding can keep the relative change above any fixed tolerance, so
    // also stop once it has not improved for a while; real roots are
    // Newton-polished afterwards
    let (mut best, mut stall) = (f64::INFINITY, 0);
    for _ in 0..1000 {
        let mut change: f64 = 0.0;
        for k in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != k {
                    denom *= z[k] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(1e-300, 0.0);
            }
            let step = eval(z[k]) / denom;
            z[k] -= step;
            change = change.max(step.norm() / z[k].norm().max(1.0));
        }
        if change <= 1e-13 {
            break;
        }
        if change < 0.5 * best {
            best = change;
            stall = 0;
        } else {
            stall += 1;
            if stall >= 25 {
                break;
            }
        }
    }
    z
}

/// Newton refinement in real arithmetic; keeps the iterate with the smallest
/// residual.
fn polish(c: &[f64], x0: f64) -> f64 {
    let mut best = x0;
    let mut best_res = poly_eval(c, x0).abs();
    let mut x = x0;
    for _ in 0..60 {
        if best_res <= 1e-15 {
            break;
        }
        let d = poly_deriv_eval(c, x);
        if d == 0.0 {
            break;
        }
        x -= poly_eval(c, x) / d;
        if !x.is_finite() {
            break;
        }
        let r = poly_eval(c, x).abs();
        if r < best_res {
            best_res = r;
            best = x;
        } else if r > 1e3 * best_res.max(1e-300) {
            break;
        }
    }
    best
}

/// Real parts of roots whose imaginary part is within `imag_tol·max(1,|z|)`,
/// Newton-polished, sorted and deduplicated.
pub(crate) fn real_roots_with_tol(coeffs: &[f64], imag_tol: f64) -> Vec<f64> {
    let c = normalize(coeffs);
    let mut out: Vec<f64> = polynomial_roots(coeffs)
        .into_iter()
        .filter(|z| z.im.abs() <= imag_tol * z.norm().max(1.0))
        .map(|z| polish(&c, z.re))
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|b, a| (*b - *a).abs() <= 1e-9 * a.abs().max(1.0));
    out
}

/// Real roots of a polynomial of degree at most four (coefficients highest
/// degree first), ascending, with near-duplicates merged.
///
/// A nonzero constant has no roots; the zero polynomial also yields none.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    real_roots_with_tol(coeffs, 1e-9)
}

/// Like [`real_roots`] but also keeps the real parts of nearly-real complex
/// pairs, which is how double roots tend to come out of Durand–Kerner.
/// Meant for candidate generation where extra points are harmless.
pub fn real_root_candidates(coeffs: &[f64]) -> Vec<f64> {
    real_roots_with_tol(coeffs, 1e-5)
}

/// The unique root `ϑ ≥ 0` of `1 − ϑ − (1+ϑ)³(1−φ) = 0` in closed form.
pub fn cardano_k(phi: f64) -> Result<f64> {
    if !(phi > 0.0 && phi < 1.0) {
        return Err(LinalgError::Domain(format!("phi = {phi} not in (0, 1)")));
    }
    let p = 1.0 / (1.0 - phi);
    let tau = (p * p + p.powi(3) / 27.0).sqrt();
    Ok(-1.0 + (p + tau).cbrt() + (p - tau).cbrt())
}
