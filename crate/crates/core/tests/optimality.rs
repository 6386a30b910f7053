mod common;

use common::{rng, vec_uniform};
use dccd::optimality::*;
use dccd::problem::{build_eig_lp, build_pca, NormOrder};
use dccd_linalg::{cardano_k, norm, sym_eig, DenseMatrix, Matrix};
use rand_chacha::ChaCha8Rng;

const THETA: f64 = 1e-6;

fn rand_psd(g: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    DenseMatrix::new(n, n, vec_uniform(g, n * n, -1.0, 1.0)).unwrap().gram()
}

fn row<'a>(rows: &'a [EnumRow], pat: &[&str]) -> &'a EnumRow {
    rows.iter().find(|r| r.y_pattern.iter().map(String::as_str).eq(pat.iter().copied())).expect("pattern present")
}

#[test]
fn cws_residual_on_scalar_example() {
    let p = example_1d();
    assert_eq!(cws_residual(&p, &[3.0], THETA).unwrap(), 0.0);
    let r = cws_residual(&p, &[-1.0], THETA).unwrap();
    assert!((r - 16.0).abs() < 1e-4, "{r}");
    assert!(cws_residual(&p, &[0.0], THETA).unwrap() > 1.0);
}

#[test]
fn scalar_example_classification() {
    let p = example_1d();
    for x in [-1.0, 0.0, 3.0] {
        let rep = classify(&p, &[x], THETA).unwrap();
        assert!(rep.sca_residual <= 1e-8, "{x}");
        assert_eq!(rep.is_cws(CWS_TOL), x == 3.0);
    }
    assert!(sca_residual(&p, &[1.0], THETA).unwrap() > 0.1);
}

#[test]
fn table5_cws_point() {
    let p = l1_example();
    assert!(cws_residual(&p, &[-2.25, -4.0, -5.0], THETA).unwrap() <= 1e-10);
}

#[test]
fn l1_example_enumeration() {
    let rows = enumerate_l1_example().unwrap();
    assert_eq!(rows.len(), 27);
    let r = row(&rows, &["-1", "-1", "-1"]);
    assert_eq!(r.x.as_deref(), Some(&[-2.25, -4.0, -5.0][..]));
    assert!((r.f.unwrap() + 18.625).abs() < 1e-9);
    assert!(r.critical && r.cws);
    let r = row(&rows, &["1", "1", "1"]);
    assert!((r.f.unwrap() + 6.625).abs() < 1e-9);
    assert!(r.critical && !r.cws);
    assert_eq!(rows.iter().filter(|r| r.cws).count(), 1);
    // the interval patterns with a solution consistent with the sign rules
    let critical: Vec<&EnumRow> = rows.iter().filter(|r| r.critical).collect();
    assert_eq!(critical.len(), 6);
    let x = row(&rows, &["[-1, 1]", "1", "1"]).x.clone().unwrap();
    assert!((x[0] - 1.6).abs() < 1e-12 && x[1].abs() < 1e-12 && (x[2] + 1.6).abs() < 1e-12);
    // this pattern's system gives [0.25, −2, −3], which violates the fixed sign of row 2
    let r = row(&rows, &["1", "-1", "[-1, 1]"]);
    let x = r.x.clone().unwrap();
    assert!((x[0] - 0.25).abs() < 1e-12 && (x[1] + 2.0).abs() < 1e-12 && (x[2] + 3.0).abs() < 1e-12);
    assert!(!r.critical);
}

#[test]
fn l1_example_critical_rows_have_zero_sca_residual() {
    let p = l1_example();
    let mut positive = 0;
    for r in enumerate_l1_example().unwrap() {
        let x = match &r.x {
            Some(x) => x,
            None => continue,
        };
        let res = sca_residual(&p, x, THETA).unwrap();
        if r.critical {
            assert!(res <= 1e-8, "{:?}: {res}", r.y_pattern);
        } else if res > 1e-8 {
            positive += 1;
        }
    }
    // per-coordinate ranges are a relaxation, so a few inconsistent patterns still certify
    assert!(positive >= 15, "{positive}");
}

#[test]
fn l2_example_enumeration() {
    let rows = enumerate_l2_example().unwrap();
    assert_eq!(rows.len(), 7);
    assert_eq!(rows.iter().filter(|r| r.critical).count(), 7);
    assert_eq!(rows.iter().filter(|r| r.cws).count(), 2);
    let eig = sym_eig(&l2_example_gram()).unwrap();
    for (k, pair) in rows[..6].chunks(2).enumerate() {
        let lam = eig.values[2 - k];
        for r in pair {
            assert!((r.f.unwrap() + lam / 2.0).abs() < 1e-10);
            assert_eq!(r.cws, k == 2);
        }
    }
    let zero = rows.last().unwrap();
    assert_eq!(zero.f, Some(0.0));
    assert!(zero.critical && !zero.cws);
}

fn l2_example_gram() -> DenseMatrix {
    example_a().gram()
}

#[test]
fn linf_example_enumeration() {
    let rows = enumerate_linf_example().unwrap();
    assert_eq!(rows.len(), 8);
    let fs: Vec<f64> = rows.iter().map(|r| r.f.unwrap()).collect();
    assert_eq!(fs, vec![-2.5, -4.0, -9.0, -10.5, -2.5, -4.0, -9.0, -10.5]);
    assert_eq!(rows[3].x.as_deref(), Some(&[4.0, 2.0, -1.0][..]));
    assert_eq!(rows[6].x.as_deref(), Some(&[-3.0, -1.0, 0.0][..]));
    let cws: Vec<bool> = rows.iter().map(|r| r.cws).collect();
    assert_eq!(cws, vec![false, false, false, true, false, false, false, true]);
    // only the rows whose own entry attains ‖Ax‖∞ satisfy the optimality inclusion
    let crit: Vec<bool> = rows.iter().map(|r| r.critical).collect();
    assert_eq!(crit, vec![false, true, false, true, false, true, false, true]);
}

#[test]
fn hierarchy_holds_on_worked_problems() {
    let problems = [
        (l1_example(), enumerate_l1_example().unwrap()),
        (l2_example(), enumerate_l2_example().unwrap()),
        (linf_example(), enumerate_linf_example().unwrap()),
    ];
    let mut strict = 0;
    for (p, rows) in &problems {
        for r in rows {
            let Some(x) = &r.x else { continue };
            let rep = classify(p, x, THETA).unwrap();
            if rep.is_cws(1e-10) {
                assert!(rep.sca_residual <= 1e-6);
            }
            if r.critical && !rep.is_cws(1e-10) {
                strict += 1;
            }
            assert_eq!(rep.is_cws(CWS_TOL), r.cws);
        }
    }
    assert!(strict > 0);
}

#[test]
fn sca_residual_at_zero_on_l1_pca() {
    let mut g = rng(41);
    let gm = Matrix::Dense(DenseMatrix::new(5, 4, vec_uniform(&mut g, 20, -1.0, 1.0)).unwrap());
    let p = build_eig_lp(&gm, None, 1.0, NormOrder::L1).unwrap();
    assert_eq!(sca_residual(&p, &[0.0; 4], THETA).unwrap(), 0.0);
    assert_eq!(sca_residual_with(&p, &[0.0; 4], THETA, SubgradientSelection::Pinned).unwrap(), 0.0);
}

#[test]
fn sca_residual_matches_closed_form() {
    let mut g = rng(42);
    let gm = Matrix::Dense(DenseMatrix::new(6, 4, vec_uniform(&mut g, 24, -1.0, 1.0)).unwrap());
    let p = build_eig_lp(&gm, None, 1.0, NormOrder::L1).unwrap();
    for _ in 0..20 {
        let x = vec_uniform(&mut g, 4, -1.0, 1.0);
        let grad = p.grad_f(&x);
        let s = p.g_subgradient(&x);
        let want: f64 = (0..4).map(|i| (grad[i] - s[i]).abs() / (p.c[i] + THETA)).sum::<f64>() / 4.0;
        let got = sca_residual(&p, &x, THETA).unwrap();
        assert!(got > 0.0);
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn quadratic_growth_examples() {
    let p = example_1d();
    assert_eq!(quadratic_growth_check(&p, &[3.0], 0.0, THETA, 0, 1.0, 1).unwrap(), 0.0);
    assert!(quadratic_growth_check(&p, &[3.0], 0.0, THETA, 1000, 2.9, 2).unwrap() <= 0.0);
    let p = l1_example();
    assert!(quadratic_growth_check(&p, &[-2.25, -4.0, -5.0], 0.0, THETA, 1000, 1.0, 3).unwrap() <= 1e-9);
}

#[test]
fn pca_closed_form_examples() {
    let cf = pca_closed_form(&DenseMatrix::identity(3), 1.0).unwrap();
    assert!((cf.f_opt + 0.5).abs() < 1e-15);
    let mut g = rng(43);
    for _ in 0..5 {
        let c = rand_psd(&mut g, 6);
        let alpha = 1.5;
        let cf = pca_closed_form(&c, alpha).unwrap();
        let p = build_pca(&c, alpha).unwrap();
        assert!((p.evaluate(&cf.x_opt) - cf.f_opt).abs() < 1e-10);
        assert!((pca_objective(&c, alpha, &cf.x_opt) - cf.f_opt).abs() < 1e-10);
        assert_eq!(cf.critical.len(), 13);
        for x in &cf.critical {
            assert!(norm(&pca_gradient(&c, alpha, x)) <= 1e-8);
        }
        let b = build_pca(&c, alpha).unwrap();
        assert!(cws_residual(&b, &cf.x_opt, THETA).unwrap() <= 1e-8);
    }
    let zero = pca_closed_form(&DenseMatrix::zeros(2, 2), 1.0).unwrap();
    assert_eq!((zero.x_opt, zero.f_opt), (vec![0.0, 0.0], 0.0));
}

#[test]
fn hessian_bound_formulas() {
    let c = DenseMatrix::from_diag(&[4.0, 1.0]);
    let b = pca_hessian_bounds(&c, 0.0).unwrap();
    assert!((b.sigma - 0.75).abs() < 1e-15);
    assert!((b.tau - 2.0).abs() < 1e-15);
    assert!(b.varpi_bar > 0.0 && b.varpi_bar <= 2.0 * cardano_k(0.25).unwrap());
    assert!(pca_hessian_bounds(&DenseMatrix::identity(2), 0.1).is_err());
    assert!(pca_hessian_bounds(&DenseMatrix::from_diag(&[1.0, 0.0]), 0.1).is_err());
}

#[test]
fn printed_and_exact_hessians_agree_at_the_optimum() {
    let mut g = rng(44);
    let c = rand_psd(&mut g, 5);
    let x = pca_closed_form(&c, 1.0).unwrap().x_opt;
    let h1 = pca_hessian(&c, &x, HessianForm::Exact).unwrap();
    let h2 = pca_hessian(&c, &x, HessianForm::Printed).unwrap();
    for (a, b) in h1.data().iter().zip(h2.data()) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn hessian_eigenvalues_stay_within_bounds() {
    let mut g = rng(45);
    for k in 0..10 {
        let c = rand_psd(&mut g, 5);
        let b = pca_hessian_bounds(&c, 0.0).unwrap();
        let radius = 0.5 * b.varpi_bar;
        let bounds = pca_hessian_bounds(&c, radius).unwrap();
        for form in [HessianForm::Exact, HessianForm::Printed] {
            let (lo, hi) = pca_hessian_extremes(&c, radius, 100, k, form).unwrap();
            assert!(lo >= bounds.sigma - 1e-6 && hi <= bounds.tau + 1e-6, "{form:?}: [{lo}, {hi}] vs {bounds:?}");
        }
    }
}
