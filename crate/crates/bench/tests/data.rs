use dccd_bench::data::{support_size, CONTAMINATION_SCALE};
use dccd_bench::*;
use dccd_linalg::{matvec, norm, LinOp, Matrix};

fn ds(kind: DataKind, m: usize, n: usize, contaminated: bool, seed: u64) -> DatasetSpec {
    DatasetSpec { kind, m, n, contaminated, seed }
}

fn entries(g: &Matrix) -> Vec<f64> {
    g.to_dense().into_data()
}

#[test]
fn same_seed_same_matrix() {
    for kind in [DataKind::Randn, DataKind::SparseSynth] {
        let a = entries(&gen_matrix(&ds(kind, 40, 30, true, 9)).unwrap());
        let b = entries(&gen_matrix(&ds(kind, 40, 30, true, 9)).unwrap());
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let c = entries(&gen_matrix(&ds(kind, 40, 30, true, 10)).unwrap());
        assert_ne!(a, c);
    }
}

#[test]
fn contamination_scales_exactly_a_tenth() {
    for (m, n) in [(50, 40), (7, 13), (128, 256)] {
        let clean = entries(&gen_matrix(&ds(DataKind::Randn, m, n, false, 3)).unwrap());
        let dirty = entries(&gen_matrix(&ds(DataKind::Randn, m, n, true, 3)).unwrap());
        let changed: Vec<usize> = (0..m * n).filter(|&k| clean[k] != dirty[k]).collect();
        assert_eq!(changed.len(), (0.1 * (m * n) as f64).floor() as usize);
        for k in changed {
            assert_eq!(dirty[k], clean[k] * CONTAMINATION_SCALE);
            assert!(((dirty[k] / clean[k]).abs() - 100.0).abs() <= 1e-13);
        }
    }
}

#[test]
fn randn_moments() {
    let v = entries(&gen_matrix(&ds(DataKind::Randn, 1000, 1000, false, 1)).unwrap());
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    assert!(mean.abs() < 0.01 && (std - 1.0).abs() < 0.01, "{mean} {std}");
}

#[test]
fn sparse_synth_is_sparse_signed_and_heavy_tailed() {
    let g = gen_matrix(&ds(DataKind::SparseSynth, 400, 500, false, 2)).unwrap();
    assert!(g.is_sparse());
    let nz: Vec<f64> = entries(&g).into_iter().filter(|v| *v != 0.0).collect();
    let density = nz.len() as f64 / 200_000.0;
    assert!((density - 0.05).abs() < 0.003, "{density}");
    let pos = nz.iter().filter(|v| **v > 0.0).count() as f64 / nz.len() as f64;
    assert!((pos - 0.5).abs() < 0.03);
    let log_mean = nz.iter().map(|v| v.abs().ln()).sum::<f64>() / nz.len() as f64;
    assert!(log_mean.abs() < 0.05, "{log_mean}");
    assert!(!gen_matrix(&ds(DataKind::Randn, 20, 20, false, 2)).unwrap().is_sparse());
}

#[test]
fn empty_dimensions_rejected() {
    assert!(gen_matrix(&ds(DataKind::Randn, 0, 3, false, 0)).is_err());
    assert!(gen_matrix(&ds(DataKind::Randn, 3, 0, false, 0)).is_err());
}

#[test]
fn dataset_names() {
    assert_eq!(ds(DataKind::Randn, 128, 256, true, 0).name(), "randn-128-256-C");
    assert_eq!(ds(DataKind::SparseSynth, 256, 128, false, 0).name(), "sparse_synth-256-128");
    let j = serde_json::to_string(&ds(DataKind::SparseSynth, 2, 3, true, 4)).unwrap();
    assert_eq!(j, r#"{"kind":"sparse_synth","m":2,"n":3,"contaminated":true,"seed":4}"#);
    let d: DatasetSpec = serde_json::from_str(r#"{"kind":"randn","m":5,"n":6}"#).unwrap();
    assert_eq!(d, ds(DataKind::Randn, 5, 6, false, 0));
}

#[test]
fn sparse_signal_support_size() {
    for (m, n) in [(64, 256), (50, 1000), (10, 3)] {
        let g = gen_matrix(&ds(DataKind::Randn, m, n, false, 5)).unwrap();
        let (x, y) = gen_signal_and_obs(Application::Sparse, &g, 5, 0.1).unwrap();
        assert_eq!(x.iter().filter(|v| **v != 0.0).count(), 200.min(n / 2));
        assert_eq!(support_size(n), 200.min(n / 2));
        assert_eq!(y.len(), m);
    }
}

#[test]
fn relu_observations_are_nonnegative() {
    let g = gen_matrix(&ds(DataKind::Randn, 60, 30, false, 6)).unwrap();
    for app in [Application::Glr, Application::Binary] {
        let (x, y) = gen_signal_and_obs(app, &g, 6, 0.1).unwrap();
        assert!(y.iter().all(|v| *v >= 0.0));
        assert!(y.iter().any(|v| *v > 0.0));
        if app == Application::Binary {
            assert!(x.iter().all(|v| v.abs() == 1.0));
        }
    }
}

#[test]
fn noise_free_observations() {
    let g = gen_matrix(&ds(DataKind::Randn, 30, 20, false, 7)).unwrap();
    let (x, y) = gen_signal_and_obs(Application::Sparse, &g, 7, 0.0).unwrap();
    assert_eq!(y, matvec(&g, &x).unwrap());
    let (x, y) = gen_signal_and_obs(Application::EigL1, &g, 7, 0.1).unwrap();
    assert!(x.is_empty() && y.is_empty());
}

#[test]
fn noise_has_the_requested_scale() {
    let g = gen_matrix(&ds(DataKind::Randn, 2000, 10, false, 8)).unwrap();
    let (x, y) = gen_signal_and_obs(Application::Sparse, &g, 8, 0.1).unwrap();
    let gx = matvec(&g, &x).unwrap();
    let e: Vec<f64> = y.iter().zip(&gx).map(|(a, b)| a - b).collect();
    let per_entry = norm(&e) / (2000f64).sqrt();
    assert!((per_entry / (0.1 * norm(&gx)) - 1.0).abs() < 0.05);
}

#[test]
fn instances_are_normalized_and_share_starts() {
    let d = ds(DataKind::Randn, 30, 20, true, 11);
    let p = AppParams::default();
    let a = build_instance(Application::EigL1, &d, &p).unwrap();
    assert!((a.g.frobenius_norm() - 1.0).abs() < 1e-12);
    assert!((norm(&a.x0) - 1.0).abs() < 1e-12);
    let b = build_instance(Application::EigL1, &d, &p).unwrap();
    assert_eq!(a.x0, b.x0);
    let s = build_instance(Application::Sparse, &d, &p).unwrap();
    assert!(s.x0.iter().all(|v| *v == 0.0));
    assert_eq!(s.problem.n(), 20);
    let raw = build_instance(Application::Sparse, &d, &AppParams { normalize: false, ..p }).unwrap();
    assert_eq!(raw.g.rows(), 30);
    assert!((raw.g.frobenius_norm() - 1.0).abs() > 1.0);
}

#[test]
fn every_application_builds() {
    let d = ds(DataKind::SparseSynth, 24, 12, false, 12);
    for app in [Application::EigL1, Application::Sparse, Application::Binary, Application::Glr, Application::Pca] {
        let inst = build_instance(app, &d, &AppParams::default()).unwrap();
        assert!(inst.problem.evaluate(&inst.x0).is_finite(), "{app}");
        assert_eq!(app.name().parse::<Application>().unwrap(), app);
    }
    assert!("nope".parse::<Application>().is_err());
}
