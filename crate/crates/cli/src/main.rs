//! `dccd`: generate data, run one solver, run a benchmark spec, classify a
//! point, or enumerate the worked examples.
//!
//! Exit codes: 0 success, 2 bad arguments or input, 3 numerical failure.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dccd::optimality::{
    classify, enumerate_l1_example, enumerate_l2_example, enumerate_linf_example, example_1d, l1_example, l2_example,
    linf_example,
};
use dccd::solvers::Rule;
use dccd::{DcProblem, SolverConfig};
use dccd_bench::{
    build_instance, build_problem, gen_matrix, gen_signal_and_obs, initial_point, run_experiment, run_solver,
    AppParams, Application, BenchError, DataKind, DatasetSpec, ExperimentSpec, SolverKind,
};
use dccd_linalg::{read_matrix, read_vector, write_matrix, write_vector, LinOp, LinalgError};

#[derive(Parser)]
#[command(name = "dccd", version, about = "Coordinate descent for DC programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic matrix.
    Gen(GenArgs),
    /// Run one solver on one instance.
    Solve(SolveArgs),
    /// Run an experiment spec (JSON) and write a report directory.
    Bench(BenchArgs),
    /// Stationarity residuals of a point (JSON).
    Classify(ClassifyArgs),
    /// Enumerate the critical points of a worked example (JSON).
    Enumerate(EnumerateArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "randn")]
    kind: DataKind,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scale a random tenth of the entries by 100.
    #[arg(long)]
    contaminate: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Where the instance comes from: a matrix file, or a generated dataset.
#[derive(Args)]
struct DataArgs {
    /// Matrix file; used as given, without normalization.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Observation vector; generated from the seed when omitted.
    #[arg(long)]
    obs: Option<PathBuf>,
    #[arg(long, default_value = "randn")]
    kind: DataKind,
    #[arg(long, default_value_t = 128)]
    m: usize,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long)]
    contaminate: bool,
    /// Dataset seed; defaults to --seed.
    #[arg(long)]
    data_seed: Option<u64>,
    /// Keep the generated matrix unscaled.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    alpha: Option<f64>,
    /// ρ for sparse or binary.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Random,
    Cyclic,
    Greedy,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    app: Application,
    #[arg(long, default_value = "cd-snca")]
    solver: SolverKind,
    #[arg(long, default_value_t = 1e-6)]
    theta: f64,
    #[arg(long, value_enum, default_value = "random")]
    rule: RuleArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget in seconds; unlimited when omitted.
    #[arg(long)]
    budget_s: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    max_epochs: usize,
    #[arg(long, default_value_t = 1e-10)]
    eps: f64,
    #[arg(long, default_value_t = 500)]
    window: usize,
    #[arg(long, default_value_t = 0)]
    record_every: usize,
    /// Start point; a seeded default otherwise.
    #[arg(long)]
    x0: Option<PathBuf>,
    /// Trace CSV.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Final iterate as a vector file.
    #[arg(long)]
    x_out: Option<PathBuf>,
    /// Write measured seconds into the trace instead of zeros.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the spec's output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Ignore time budgets and write zero timings.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Worked {
    /// min (x−1)² − 4|x|
    #[value(name = "1d")]
    OneD,
    /// quadratic minus ‖Ax‖₁ in R³
    #[value(name = "59")]
    L1,
    /// ½‖x‖² − ‖Ax‖₂
    #[value(name = "61")]
    L2,
    /// ½‖x‖² − ‖Ax‖∞
    #[value(name = "62")]
    Linf,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Application instance to classify against.
    #[arg(long, required_unless_present = "problem", conflicts_with = "problem")]
    app: Option<Application>,
    /// One of the worked examples instead of an application.
    #[arg(long, value_enum)]
    problem: Option<Worked>,
    #[arg(long)]
    point: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    theta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long, value_enum)]
    problem: Worked,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }
}

impl From<dccd::Error> for CliError {
    fn from(e: dccd::Error) -> Self {
        let code = match e {
            dccd::Error::NonCoercive | dccd::Error::Numerical(_) => 3,
            _ => 2,
        };
        Self { code, msg: e.to_string() }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Core(c) => c.into(),
            other => Self::usage(other.to_string()),
        }
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::usage(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Enumerate(a) => enumerate(a),
    }
}

/// Writes to the file, or to stdout when no path is given.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let mut w = io::BufWriter::new(fs::File::create(p)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = io::stdout().lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn read_vec(path: &Path) -> Result<Vec<f64>> {
    let f = fs::File::open(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(read_vector(BufReader::new(f))?)
}

fn gen(a: GenArgs) -> Result<()> {
    let spec = DatasetSpec { kind: a.kind, m: a.m, n: a.n, contaminated: a.contaminate, seed: a.seed };
    let g = gen_matrix(&spec)?;
    emit(a.output.as_deref(), |w| Ok(write_matrix(&g, w)?))
}

fn params(d: &DataArgs, app: Application) -> AppParams {
    let mut p = AppParams { normalize: !d.no_normalize, ..AppParams::default() };
    if let Some(alpha) = d.alpha {
        p.alpha = alpha;
    }
    if let Some(noise) = d.noise {
        p.noise = noise;
    }
    if let Some(rho) = d.rho {
        match app {
            Application::Binary => p.rho_binary = rho,
            _ => p.rho_sparse = rho,
        }
    }
    p
}

/// The problem and default start point described by the data arguments.
fn load(app: Application, d: &DataArgs, seed: u64) -> Result<(DcProblem, Vec<f64>)> {
    let params = params(d, app);
    let data_seed = d.data_seed.unwrap_or(seed);
    match &d.matrix {
        Some(path) => {
            let f = fs::File::open(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            let g = read_matrix(BufReader::new(f))?;
            let y = match &d.obs {
                Some(p) => read_vec(p)?,
                None => gen_signal_and_obs(app, &g, data_seed, params.noise)?.1,
            };
            let problem = build_problem(app, &g, &y, &params)?;
            Ok((problem, initial_point(app, g.cols(), data_seed)))
        }
        None => {
            if d.obs.is_some() {
                return Err(CliError::usage("--obs needs --matrix"));
            }
            let spec = DatasetSpec { kind: d.kind, m: d.m, n: d.n, contaminated: d.contaminate, seed: data_seed };
            let inst = build_instance(app, &spec, &params)?;
            Ok((inst.problem, inst.x0))
        }
    }
}

fn solve(a: SolveArgs) -> Result<()> {
    let (problem, default_x0) = load(a.app, &a.data, a.seed)?;
    let x0 = match &a.x0 {
        Some(p) => read_vec(p)?,
        None => default_x0,
    };
    let config = SolverConfig {
        theta: a.theta,
        rule: match a.rule {
            RuleArg::Random => Rule::Random { seed: a.seed },
            RuleArg::Cyclic => Rule::Cyclic,
            RuleArg::Greedy => Rule::Greedy,
        },
        eps: a.eps,
        window: a.window,
        time_budget_s: a.budget_s,
        max_epochs: a.max_epochs,
        record_every: a.record_every,
    };
    let trace = run_solver(a.solver, &problem, &config, &x0)?;
    if let Some(p) = &a.output {
        emit(Some(p), |w| Ok(trace.write_csv(w, a.timing)?))?;
    }
    if let Some(p) = &a.x_out {
        emit(Some(p), |w| Ok(write_vector(&trace.final_x, w)?))?;
    }
    emit_json(None, &trace.summary(a.seed))
}

fn bench(a: BenchArgs) -> Result<()> {
    let text = fs::read_to_string(&a.spec).map_err(|e| CliError::usage(format!("{}: {e}", a.spec.display())))?;
    let mut spec: ExperimentSpec = serde_json::from_str(&text)?;
    if let Some(o) = a.output {
        spec.output_dir = o;
    }
    if a.deterministic {
        spec.deterministic = true;
    }
    if spec.output_dir.as_os_str().is_empty() {
        return Err(CliError::usage("no output directory (use -o or set output_dir)"));
    }
    let report = run_experiment(&spec)?;
    emit(None, |w| Ok(report.write_csv(w)?))
}

fn worked_problem(w: Worked) -> DcProblem {
    match w {
        Worked::OneD => example_1d(),
        Worked::L1 => l1_example(),
        Worked::L2 => l2_example(),
        Worked::Linf => linf_example(),
    }
}

fn classify_cmd(a: ClassifyArgs) -> Result<()> {
    let problem = match (a.problem, a.app) {
        (Some(w), _) => worked_problem(w),
        (None, Some(app)) => load(app, &a.data, a.seed)?.0,
        (None, None) => return Err(CliError::usage("need --app or --problem")),
    };
    let x = read_vec(&a.point)?;
    if x.len() != problem.n() {
        return Err(CliError::usage(format!("point has length {}, problem has n = {}", x.len(), problem.n())));
    }
    let report = classify(&problem, &x, a.theta)?;
    emit_json(a.output.as_deref(), &report)
}

fn enumerate(a: EnumerateArgs) -> Result<()> {
    let rows = match a.problem {
        Worked::L1 => enumerate_l1_example()?,
        Worked::L2 => enumerate_l2_example()?,
        Worked::Linf => enumerate_linf_example()?,
        Worked::OneD => return Err(CliError::usage("enumerate supports 59, 61 and 62")),
    };
    emit_json(a.output.as_deref(), &rows)
}
