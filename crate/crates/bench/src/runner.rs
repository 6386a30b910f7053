//! Experiment matrix execution and report emission.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dccd::solvers::{run_baseline, run_cd, Baseline, Rule, StopReason, Variant};
use dccd::{DcProblem, SolverConfig, Trace};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{build_instance, AppParams, Application, DataKind, DatasetSpec};
use crate::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    CdSnca,
    CdSca,
    Mscr,
    Pdca,
    Subgrad,
    Tdual,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Mscr,
        SolverKind::Pdca,
        SolverKind::Tdual,
        SolverKind::Subgrad,
        SolverKind::CdSca,
        SolverKind::CdSnca,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::CdSnca => "cd-snca",
            SolverKind::CdSca => "cd-sca",
            SolverKind::Mscr => "mscr",
            SolverKind::Pdca => "pdca",
            SolverKind::Subgrad => "subgrad",
            SolverKind::Tdual => "tdual",
        }
    }

    /// The comparison set used for an application's table.
    pub fn defaults_for(app: Application) -> Vec<SolverKind> {
        let mut v = vec![SolverKind::Mscr, SolverKind::Pdca];
        if app == Application::EigL1 {
            v.push(SolverKind::Tdual);
        }
        v.extend([SolverKind::Subgrad, SolverKind::CdSca, SolverKind::CdSnca]);
        v
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown solver `{s}` (expected cd-snca, cd-sca, mscr, pdca, subgrad or tdual)"))
    }
}

pub fn run_solver(kind: SolverKind, problem: &DcProblem, config: &SolverConfig, x0: &[f64]) -> dccd::Result<Trace> {
    let mut trace = match kind {
        SolverKind::CdSnca => run_cd(problem, config, x0, Variant::Snca)?,
        SolverKind::CdSca => run_cd(problem, config, x0, Variant::Sca)?,
        SolverKind::Mscr => run_baseline(problem, Baseline::Mscr, config, x0)?,
        SolverKind::Pdca => run_baseline(problem, Baseline::Pdca, config, x0)?,
        SolverKind::Subgrad => run_baseline(problem, Baseline::Subgrad, config, x0)?,
        SolverKind::Tdual => run_baseline(problem, Baseline::TdualL1pca, config, x0)?,
    };
    trace.solver = kind.name().to_string();
    Ok(trace)
}

fn default_repeats() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub application: Application,
    pub datasets: Vec<DatasetSpec>,
    pub solvers: Vec<SolverKind>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub config: SolverConfig,
    #[serde(default)]
    pub output_dir: PathBuf,
    /// Ignore the time budget and write zero timings, so that outputs depend
    /// only on the spec.
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default)]
    pub params: AppParams,
    /// Write one CSV trace per run.
    #[serde(default = "default_true")]
    pub traces: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(BenchError::Invalid("repeats must be at least 1".into()));
        }
        if self.datasets.is_empty() || self.solvers.is_empty() {
            return Err(BenchError::Invalid("datasets and solvers must be nonempty".into()));
        }
        for d in &self.datasets {
            d.validate()?;
        }
        if self.solvers.contains(&SolverKind::Tdual) && self.application != Application::EigL1 {
            return Err(BenchError::Invalid(format!("tdual does not apply to {}", self.application)));
        }
        self.config.validate()?;
        Ok(())
    }

    /// Configuration for one run: the repeat seed drives the random rule.
    pub fn run_config(&self, seed: u64) -> SolverConfig {
        let mut c = self.config.clone();
        if let Rule::Random { .. } = c.rule {
            c.rule = Rule::Random { seed };
        }
        if self.deterministic {
            c.time_budget_s = None;
        }
        c
    }
}

/// The desk-scale grid: 128×256 and 256×128, randn and sparse_synth, clean
/// and contaminated.
pub fn desk_datasets(seed: u64) -> Vec<DatasetSpec> {
    let mut v = Vec::new();
    for kind in [DataKind::Randn, DataKind::SparseSynth] {
        for (m, n) in [(128, 256), (256, 128)] {
            for contaminated in [false, true] {
                v.push(DatasetSpec { kind, m, n, contaminated, seed });
            }
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    #[serde(rename = "final_F")]
    pub final_f: Option<f64>,
    pub iters: u64,
    pub stop_reason: Option<StopReason>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub application: Application,
    pub dataset: String,
    pub solver: SolverKind,
    /// Mean and sample standard deviation over the successful runs.
    #[serde(rename = "mean_F")]
    pub mean_f: Option<f64>,
    #[serde(rename = "std_F")]
    pub std_f: Option<f64>,
    /// 1, 2 or 3 for the best three means within the dataset.
    pub rank: Option<u8>,
    pub failed: bool,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub application: Application,
    pub repeats: usize,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn rows_for<'a>(&'a self, dataset: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.dataset == dataset)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "application,dataset,solver,runs,mean_F,std_F,rank,failed")?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.application,
                r.dataset,
                r.solver,
                r.runs.len(),
                opt(r.mean_f),
                opt(r.std_f),
                r.rank.map(|k| k.to_string()).unwrap_or_default(),
                r.failed
            )?;
        }
        Ok(())
    }
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Marks the three smallest means per dataset; failed rows are not ranked
/// and ties keep the row order.
pub fn assign_ranks(rows: &mut [ReportRow]) {
    let mut datasets: Vec<String> = Vec::new();
    for r in rows.iter() {
        if !datasets.contains(&r.dataset) {
            datasets.push(r.dataset.clone());
        }
    }
    for d in datasets {
        let mut idx: Vec<usize> =
            (0..rows.len()).filter(|&k| rows[k].dataset == d && !rows[k].failed && rows[k].mean_f.is_some()).collect();
        idx.sort_by(|&a, &b| rows[a].mean_f.unwrap().total_cmp(&rows[b].mean_f.unwrap()));
        for r in rows.iter_mut().filter(|r| r.dataset == d) {
            r.rank = None;
        }
        for (place, &k) in idx.iter().take(3).enumerate() {
            rows[k].rank = Some(place as u8 + 1);
        }
    }
}

struct Cell {
    dataset: usize,
    repeat: usize,
    solver: usize,
}

struct CellResult {
    record: RunRecord,
    trace: Option<Trace>,
}

fn run_cell(spec: &ExperimentSpec, cell: &Cell) -> CellResult {
    let seed = spec.datasets[cell.dataset].seed + cell.repeat as u64;
    let dataset = spec.datasets[cell.dataset].with_seed(seed);
    let kind = spec.solvers[cell.solver];
    let outcome = build_instance(spec.application, &dataset, &spec.params)
        .and_then(|inst| Ok(run_solver(kind, &inst.problem, &spec.run_config(seed), &inst.x0)?));
    match outcome {
        Ok(t) => CellResult {
            record: RunRecord {
                seed,
                final_f: Some(t.final_f),
                iters: t.iterations,
                stop_reason: Some(t.stop_reason),
                error: None,
            },
            trace: spec.traces.then_some(t),
        },
        Err(e) => CellResult {
            record: RunRecord { seed, final_f: None, iters: 0, stop_reason: None, error: Some(e.to_string()) },
            trace: None,
        },
    }
}

/// Runs every dataset × seed × solver cell and assembles the report, without
/// touching the file system. Traces are returned in row order.
pub fn execute(spec: &ExperimentSpec) -> Result<(Report, Vec<Vec<Option<Trace>>>)> {
    spec.validate()?;
    let mut cells = Vec::new();
    for dataset in 0..spec.datasets.len() {
        for solver in 0..spec.solvers.len() {
            for repeat in 0..spec.repeats {
                cells.push(Cell { dataset, repeat, solver });
            }
        }
    }
    let results: Vec<CellResult> = cells.par_iter().map(|c| run_cell(spec, c)).collect();
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for chunk in results.chunks(spec.repeats).zip(cells.chunks(spec.repeats)) {
        let (res, cs) = chunk;
        let runs: Vec<RunRecord> = res.iter().map(|r| r.record.clone()).collect();
        let ok: Vec<f64> = runs.iter().filter_map(|r| r.final_f).collect();
        let failed = ok.len() < runs.len();
        let (mean_f, std_f) = if ok.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_std(&ok);
            (Some(m), Some(s))
        };
        rows.push(ReportRow {
            application: spec.application,
            dataset: spec.datasets[cs[0].dataset].name(),
            solver: spec.solvers[cs[0].solver],
            mean_f,
            std_f,
            rank: None,
            failed,
            runs,
        });
        traces.push(res.iter().map(|r| r.trace.clone()).collect());
    }
    assign_ranks(&mut rows);
    Ok((Report { application: spec.application, repeats: spec.repeats, rows }, traces))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Executes the spec and writes `report.csv`, `report.json` and, when
/// enabled, `traces/<dataset>/<solver>/seed<k>.csv` under `output_dir`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    let (report, traces) = execute(spec)?;
    let dir = &spec.output_dir;
    fs::create_dir_all(dir)?;
    let mut w = create(&dir.join("report.csv"))?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("report.json"))?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    for (row, ts) in report.rows.iter().zip(&traces) {
        for (run, t) in row.runs.iter().zip(ts) {
            if let Some(t) = t {
                let path =
                    dir.join("traces").join(&row.dataset).join(row.solver.name()).join(format!("seed{}.csv", run.seed));
                let mut w = create(&path)?;
                t.write_csv(&mut w, !spec.deterministic)?;
                w.flush()?;
            }
        }
    }
    Ok(report)
}
