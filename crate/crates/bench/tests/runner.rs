use std::fs;
use std::path::Path;

use dccd::solvers::Rule;
use dccd::SolverConfig;
use dccd_bench::runner::{assign_ranks, mean_std};
use dccd_bench::*;

fn config(max_epochs: usize) -> SolverConfig {
    SolverConfig { max_epochs, time_budget_s: None, ..Default::default() }
}

fn small_spec(app: Application, solvers: Vec<SolverKind>, repeats: usize) -> ExperimentSpec {
    ExperimentSpec {
        application: app,
        datasets: vec![
            DatasetSpec { kind: DataKind::Randn, m: 20, n: 12, contaminated: false, seed: 1 },
            DatasetSpec { kind: DataKind::SparseSynth, m: 30, n: 16, contaminated: true, seed: 2 },
        ],
        solvers,
        repeats,
        config: config(50),
        output_dir: Default::default(),
        deterministic: true,
        params: AppParams::default(),
        traces: true,
    }
}

#[test]
fn single_run_row_matches_the_trace() {
    let mut spec = small_spec(Application::Sparse, vec![SolverKind::CdSnca], 1);
    spec.datasets.truncate(1);
    let (report, _) = execute(&spec).unwrap();
    assert_eq!(report.rows.len(), 1);
    let inst = build_instance(Application::Sparse, &spec.datasets[0], &spec.params).unwrap();
    let t = run_solver(SolverKind::CdSnca, &inst.problem, &spec.run_config(1), &inst.x0).unwrap();
    let row = &report.rows[0];
    assert_eq!(row.mean_f, Some(t.final_f));
    assert_eq!(row.std_f, Some(0.0));
    assert_eq!(row.rank, Some(1));
    assert_eq!(t.solver, "cd-snca");
}

#[test]
fn repeats_use_consecutive_seeds_and_shared_starts() {
    let spec = small_spec(Application::EigL1, vec![SolverKind::CdSca, SolverKind::CdSnca], 3);
    let (report, traces) = execute(&spec).unwrap();
    assert_eq!(report.rows.len(), 4);
    for row in &report.rows {
        let base = if row.dataset.starts_with("randn") { 1 } else { 2 };
        let seeds: Vec<u64> = row.runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![base, base + 1, base + 2]);
    }
    // both solvers see the same instance: their first samples coincide
    for d in 0..2 {
        for k in 0..3 {
            let a = traces[2 * d][k].as_ref().unwrap();
            let b = traces[2 * d + 1][k].as_ref().unwrap();
            assert_eq!(a.samples[0].f, b.samples[0].f);
        }
    }
    assert_eq!(spec.run_config(7).rule, Rule::Random { seed: 7 });
}

#[test]
fn report_arithmetic_is_recomputable() {
    let spec = small_spec(Application::Glr, SolverKind::defaults_for(Application::Glr), 4);
    let (report, _) = execute(&spec).unwrap();
    for row in &report.rows {
        let v: Vec<f64> = row.runs.iter().map(|r| r.final_f.unwrap()).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
        assert!((row.mean_f.unwrap() - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
        assert!((row.std_f.unwrap() - std).abs() <= 1e-12 * (1.0 + std));
    }
}

#[test]
fn ranks_match_an_independent_sort() {
    let spec = small_spec(Application::Binary, SolverKind::defaults_for(Application::Binary), 2);
    let (report, _) = execute(&spec).unwrap();
    for d in ["randn-20-12", "sparse_synth-30-16-C"] {
        let rows: Vec<&ReportRow> = report.rows_for(d).collect();
        let mut means: Vec<(f64, SolverKind)> = rows.iter().map(|r| (r.mean_f.unwrap(), r.solver)).collect();
        means.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (place, (_, s)) in means.iter().enumerate() {
            let r = rows.iter().find(|r| r.solver == *s).unwrap();
            assert_eq!(r.rank, if place < 3 { Some(place as u8 + 1) } else { None });
        }
    }
}

#[test]
fn failed_rows_are_marked_and_unranked() {
    let mut spec = small_spec(Application::Binary, vec![SolverKind::CdSnca], 2);
    spec.params.rho_binary = -1.0;
    let (report, _) = execute(&spec).unwrap();
    for row in &report.rows {
        assert!(row.failed && row.mean_f.is_none() && row.rank.is_none());
        assert!(row.runs.iter().all(|r| r.error.is_some()));
    }
    let mut rows = report.rows.clone();
    rows[0].failed = false;
    rows[0].mean_f = Some(1.0);
    assign_ranks(&mut rows);
    assert_eq!(rows[0].rank, Some(1));
    assert_eq!(rows[1].rank, None);
}

#[test]
fn mean_std_edge_cases() {
    assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
    let (m, s) = mean_std(&[1.0, 3.0]);
    assert_eq!(m, 2.0);
    assert!((s - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn invalid_specs_rejected() {
    let mut spec = small_spec(Application::Sparse, vec![SolverKind::CdSnca], 1);
    spec.repeats = 0;
    assert!(execute(&spec).is_err());
    let spec = small_spec(Application::Sparse, vec![SolverKind::Tdual], 1);
    assert!(execute(&spec).is_err());
    let mut spec = small_spec(Application::Sparse, vec![SolverKind::CdSnca], 1);
    spec.config.theta = 0.0;
    assert!(execute(&spec).is_err());
}

#[test]
fn spec_json_defaults() {
    let s: ExperimentSpec = serde_json::from_str(
        r#"{"application":"eig_l1","datasets":[{"kind":"randn","m":4,"n":3}],"solvers":["cd-snca","tdual"]}"#,
    )
    .unwrap();
    assert_eq!(s.repeats, 1);
    assert_eq!(s.solvers, vec![SolverKind::CdSnca, SolverKind::Tdual]);
    assert!(s.traces && !s.deterministic);
    let back: ExperimentSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(back, s);
    for k in SolverKind::ALL {
        assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
    }
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for k in 0..2 {
        let mut spec = small_spec(Application::EigL1, SolverKind::defaults_for(Application::EigL1), 2);
        spec.output_dir = tmp.path().join(format!("run{k}"));
        run_experiment(&spec).unwrap();
        trees.push(read_tree(&spec.output_dir));
    }
    assert_eq!(trees[0], trees[1]);
    let names: Vec<&str> = trees[0].iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"report.csv") && names.contains(&"report.json"));
    assert!(names.contains(&"traces/randn-20-12/cd-snca/seed1.csv"));
    assert_eq!(names.len(), 2 + 2 * 6 * 2);
    let csv = String::from_utf8(trees[0].iter().find(|(n, _)| n == "report.csv").unwrap().1.clone()).unwrap();
    assert!(csv.starts_with("application,dataset,solver,runs,mean_F,std_F,rank,failed\n"));
    assert_eq!(csv.lines().count(), 1 + 12);
    let json: Report = serde_json::from_slice(&trees[0].iter().find(|(n, _)| n == "report.json").unwrap().1).unwrap();
    assert_eq!(json.rows.len(), 12);
}

#[test]
fn eig_l1_desk_matrix_favours_cd_snca() {
    let spec = ExperimentSpec {
        application: Application::EigL1,
        datasets: vec![DatasetSpec { kind: DataKind::Randn, m: 128, n: 256, contaminated: false, seed: 0 }],
        solvers: SolverKind::defaults_for(Application::EigL1),
        repeats: 10,
        config: config(1000),
        output_dir: Default::default(),
        deterministic: true,
        params: AppParams::default(),
        traces: false,
    };
    let (report, _) = execute(&spec).unwrap();
    let snca = report.rows.iter().find(|r| r.solver == SolverKind::CdSnca).unwrap().mean_f.unwrap();
    for r in &report.rows {
        assert!(snca <= r.mean_f.unwrap(), "{} {}", r.solver, r.mean_f.unwrap());
    }
}
