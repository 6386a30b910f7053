mod common;

use common::{grid_min, grid_range, rng, uniform, vec_uniform};
use dccd::prox::*;
use rand::Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn l1_pure_quadratic() {
    let r = prox_l1_compose(&ProxQuery::new(2.0, 4.0), &[], &[]).unwrap();
    assert!(close(r.eta, -2.0, 1e-12) && close(r.value, -4.0, 1e-12));
}

#[test]
fn l1_scalar_kink_example() {
    let r = prox_l1_compose(&ProxQuery::new(2.0, -2.0), &[4.0], &[0.0]).unwrap();
    assert!(close(r.eta, 3.0, 1e-12), "{r:?}");
    assert!(close(r.value, -9.0, 1e-12));
}

#[test]
fn linf_symmetric_tie_goes_negative() {
    let r = prox_linf_compose(&ProxQuery::new(1.0, 0.0), &[1.0], &[0.0]).unwrap();
    assert_eq!(r.eta, -1.0);
    assert!(close(r.value, -0.5, 1e-12));
}

#[test]
fn linf_two_candidates() {
    // p(η) = ½η² + 2η − |3η + 1|; candidates 1 and −5
    let r = prox_linf_compose(&ProxQuery::new(1.0, 2.0), &[3.0], &[1.0]).unwrap();
    let p = |e: f64| 0.5 * e * e + 2.0 * e - (3.0 * e + 1.0).abs();
    assert_eq!(r.eta, -5.0);
    assert!(close(r.value, p(-5.0), 1e-12));
    assert!(p(-5.0) < p(1.0));
}

#[test]
fn relu_examples() {
    let r = prox_relu_compose(&ProxQuery::new(2.0, 3.0), &[], &[]).unwrap();
    assert!(close(r.eta, -1.5, 1e-12));
    let r = prox_relu_compose(&ProxQuery::new(1.0, 0.0), &[1.0], &[0.0]).unwrap();
    assert!(close(r.eta, 1.0, 1e-12) && close(r.value, -0.5, 1e-12), "{r:?}");
}

#[test]
fn l2_examples() {
    let r = prox_l2_compose(&ProxQuery::new(1.0, 0.0), &[1.0, 0.0], &[0.0, 1.0]).unwrap();
    assert_eq!(r.eta, 0.0);
    assert!(close(r.value, -1.0, 1e-12));
    let r = prox_l2_compose(&ProxQuery::new(1.0, -0.5), &[1.0], &[0.0]).unwrap();
    assert!(close(r.eta, 1.5, 1e-10) && close(r.value, -1.125, 1e-12), "{r:?}");
    let r = prox_l2_compose(&ProxQuery::new(2.0, 1.0), &[0.0, 0.0], &[1.0, 2.0]).unwrap();
    assert!(close(r.eta, -0.5, 1e-12));
}

#[test]
fn top_s_full_support_cancels() {
    let x = [0.3, -1.0, 2.0];
    for i in 0..3 {
        let r = prox_top_s(&ProxQuery::new(1.0, 2.0), i, &x, 3, 0.7).unwrap();
        assert!(close(r.eta, -2.0, 1e-12));
    }
}

#[test]
fn top_s_small_example() {
    let x = [0.0, 5.0];
    let r = prox_top_s(&ProxQuery::new(2.0, -2.0), 0, &x, 1, 1.0).unwrap();
    let p = |e: f64| e * e - 2.0 * e + e.abs() - e.abs().max(5.0);
    let (ge, gv) = grid_min(p, -50.0, 50.0, 1e-4);
    assert!(r.value <= gv + 1e-9 && close(r.value, p(r.eta), 1e-12), "{r:?} vs {ge}");
    assert!(close(r.eta, 0.5, 1e-12));
    assert!(prox_top_s(&ProxQuery::new(1.0, 0.0), 0, &x, 3, 1.0).is_err());
}

#[test]
fn convex_sca_examples() {
    assert!(close(prox_convex_sca(2.0, 4.0, Separable::Zero, 0.0).unwrap().eta, -2.0, 1e-15));
    assert_eq!(prox_convex_sca(1.0, 0.5, Separable::L1 { rho: 1.0 }, 0.0).unwrap().eta, 0.0);
    let r = prox_convex_sca(1.0, -3.0, Separable::Box { lo: -1.0, hi: 1.0 }, 0.5).unwrap();
    assert!(close(r.eta, 0.5, 1e-15));
}

#[test]
fn non_coercive_rejected() {
    assert!(matches!(prox_l1_compose(&ProxQuery::new(0.0, 1.0), &[1.0], &[0.0]), Err(dccd::Error::NonCoercive)));
    let q = ProxQuery::with_interval(0.0, 1.0, Interval::new(-1.0, 2.0).unwrap());
    let r = prox_l1_compose(&q, &[1.0], &[0.0]).unwrap();
    assert_eq!(r.eta, -1.0);
}

#[test]
fn deterministic_and_never_worse_than_zero() {
    let mut g = rng(3);
    for _ in 0..200 {
        let m = g.random_range(1..=6);
        let gv = vec_uniform(&mut g, m, -2.0, 2.0);
        let dv = vec_uniform(&mut g, m, -2.0, 2.0);
        let q = ProxQuery::new(uniform(&mut g, 0.5, 3.0), uniform(&mut g, -3.0, 3.0));
        for f in [prox_l1_compose, prox_relu_compose, prox_linf_compose, prox_l2_compose] {
            let r1 = f(&q, &gv, &dv).unwrap();
            let r2 = f(&q, &gv, &dv).unwrap();
            assert_eq!(r1, r2);
            let r0 = f(&ProxQuery::new(q.a, q.b), &gv, &dv).unwrap();
            assert!(r0.value <= f(&q, &gv, &dv).unwrap().value + 1e-15);
        }
    }
}

struct Instance {
    q: ProxQuery,
    g: Vec<f64>,
    d: Vec<f64>,
}

fn instance(g: &mut rand_chacha::ChaCha8Rng, boxed: bool) -> Instance {
    let m = g.random_range(1..=6);
    let gv: Vec<f64> = (0..m).map(|_| if g.random::<f64>() < 0.15 { 0.0 } else { uniform(g, -2.0, 2.0) }).collect();
    let dv = vec_uniform(g, m, -3.0, 3.0);
    let a = uniform(g, 0.5, 3.0);
    let b = uniform(g, -4.0, 4.0);
    let q = if boxed {
        let xi = uniform(g, -1.0, 1.0);
        ProxQuery::with_interval(a, b, Interval::new(-1.0 - xi, 1.0 - xi).unwrap())
    } else {
        ProxQuery::new(a, b)
    };
    Instance { q, g: gv, d: dv }
}

fn check_against_grid(name: &str, r: ProxResult, q: &ProxQuery, lip: f64, p: impl Fn(f64) -> f64) {
    assert!(q.feasible.contains(r.eta), "{name}: η = {} outside interval", r.eta);
    assert!((r.value - p(r.eta)).abs() <= 1e-9 * (1.0 + r.value.abs()), "{name}: reported value off");
    let (lo, hi) = grid_range(q.a, q.b, lip, q.feasible.lo, q.feasible.hi);
    let (ge, gv) = grid_min(&p, lo, hi, 1e-4);
    assert!(r.value <= gv + 1e-6, "{name}: {r:?} but grid has {gv} at {ge}");
}

#[test]
fn composed_operators_match_grid() {
    let mut g = rng(11);
    for k in 0..150 {
        let inst = instance(&mut g, k % 3 == 0);
        let (q, gv, dv) = (&inst.q, &inst.g, &inst.d);
        let l1: f64 = gv.iter().map(|v| v.abs()).sum();
        let l2: f64 = gv.iter().map(|v| v * v).sum::<f64>().sqrt();
        let linf = gv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let quad = |e: f64| 0.5 * q.a * e * e + q.b * e;
        let terms = |e: f64| gv.iter().zip(dv).map(move |(gj, dj)| gj * e + dj);
        check_against_grid("l1", prox_l1_compose(q, gv, dv).unwrap(), q, l1, |e| {
            quad(e) - terms(e).map(f64::abs).sum::<f64>()
        });
        check_against_grid("relu", prox_relu_compose(q, gv, dv).unwrap(), q, l1, |e| {
            quad(e) - terms(e).map(|t| t.max(0.0)).sum::<f64>()
        });
        check_against_grid("linf", prox_linf_compose(q, gv, dv).unwrap(), q, linf, |e| {
            quad(e) - terms(e).fold(0.0f64, |m, t| m.max(t.abs()))
        });
        check_against_grid("l2", prox_l2_compose(q, gv, dv).unwrap(), q, l2, |e| {
            quad(e) - terms(e).map(|t| t * t).sum::<f64>().sqrt()
        });
    }
}

#[test]
fn l2_parallel_kink_is_found() {
    // gη + d vanishes at η = 0.5, which is the global minimizer
    let q = ProxQuery::new(10.0, -5.0);
    let r = prox_l2_compose(&q, &[2.0, -4.0], &[-1.0, 2.0]).unwrap();
    let p = |e: f64| 5.0 * e * e - 5.0 * e - ((2.0 * e - 1.0).powi(2) + (4.0 * e - 2.0).powi(2)).sqrt();
    let (_, gv) = grid_min(p, -5.0, 5.0, 1e-4);
    assert!(r.value <= gv + 1e-9, "{r:?}");
}

#[test]
fn top_s_matches_grid() {
    let mut g = rng(12);
    for _ in 0..150 {
        let n = g.random_range(1..=6);
        let s = g.random_range(1..=n);
        let i = g.random_range(0..n);
        let x = vec_uniform(&mut g, n, -3.0, 3.0);
        let rho = uniform(&mut g, 0.1, 2.0);
        let q = ProxQuery::new(uniform(&mut g, 0.5, 3.0), uniform(&mut g, -4.0, 4.0));
        let r = prox_top_s(&q, i, &x, s, rho).unwrap();
        let p = |e: f64| {
            let mut y = x.clone();
            y[i] += e;
            let mut m: Vec<f64> = y.iter().map(|v| v.abs()).collect();
            m.sort_by(|a, b| b.total_cmp(a));
            0.5 * q.a * e * e + q.b * e + rho * y[i].abs() - rho * m[..s].iter().sum::<f64>()
        };
        check_against_grid("top-s", r, &q, 2.0 * rho, p);
    }
}

#[test]
fn quartic_coefficients_expand_the_product() {
    let mut g = rng(5);
    for _ in 0..50 {
        let v = vec_uniform(&mut g, 6, -2.0, 2.0);
        let (a, b, gg, gd, dd, e) = (v[0].abs() + 0.1, v[1], v[2].abs() + 0.1, v[3], v[4].abs() + 4.0, v[5]);
        let c = l2_quartic(a, b, gg, gd, dd);
        let poly = c.iter().fold(0.0, |acc, k| acc * e + k);
        let direct = (gg * e * e + 2.0 * gd * e + dd) * (a * e + b).powi(2) - (gg * e + gd).powi(2);
        assert!((poly - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
    }
}
