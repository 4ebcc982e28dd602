//! Command-line front end.
//!
//! Every subcommand maps onto one library entry point. Failures are reported
//! as a single JSON object on stderr, `{"error": {"code": ..., "message": ...}}`,
//! with a per-class exit status (see [`Error::exit_code`]).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::diagnostics::{
    directional_containment, hull_trace, influence_decay, radius_trace, run_counterexample_with, DirectionalReport,
    HullTrace, InfluenceReport, OscillatingSchedule, RadiusTrace, DEFAULT_DIRECTIONS, DEFAULT_DIRECTION_SEED,
};
use crate::engine::{
    extract_clusters, run, Mode, RunConfig, TraceLevel, DEFAULT_MAX_ITERATIONS, DEFAULT_MERGE_TOLERANCE,
    DEFAULT_STOP_DISPLACEMENT,
};
use crate::error::{Error, Result};
use crate::experiments::{run_experiment, ExperimentConfig, ExperimentReport, DEFAULT_SEED};
use crate::gaussian_theory::std_table;
use crate::io;
use crate::kernel::KernelSpec;

/// Exit status for command lines clap rejects.
pub const USAGE_EXIT_CODE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "blurshift", version, about = "Blurring and nonblurring mean-shift toolkit")]
pub struct Cli {
    /// Worker threads for the engine and experiments (default: all cores).
    #[arg(long, global = true, env = "BLURSHIFT_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the engine on a points CSV and write the clustering as JSON.
    Cluster(ClusterArgs),
    /// Closed-form standard deviations of both processes on Gaussian data.
    Theory(TheoryArgs),
    /// Monte Carlo studies of the converged points.
    Experiment(ExperimentArgs),
    /// Check hull nesting, radius monotonicity and cross-cluster influence on a trace.
    Diagnose(DiagnoseArgs),
    /// Oscillating three-point run under re-assigned weights.
    Counterexample(CounterexampleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelChoice {
    /// `exp(-d^2 / 2 tau^2)`, cut off beyond `--cutoff` when given.
    Gaussian,
    /// 1 at zero, 1/2 up to distance 1, 0 beyond.
    ExampleOne,
}

#[derive(Clone, Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub kernel: Option<KernelChoice>,
    /// Gaussian bandwidth.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Distance beyond which the Gaussian is set to zero.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// JSON kernel description, e.g. `{"family": "truncated_flat", "levels": [[0, 1], [1, 0.5]]}`.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["kernel", "tau", "cutoff"])]
    pub kernel_file: Option<PathBuf>,
}

impl KernelArgs {
    /// The requested kernel, or `None` when no kernel flag was given.
    pub fn resolve(&self) -> Result<Option<KernelSpec>> {
        if let Some(path) = &self.kernel_file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
            return KernelSpec::from_json(&text).map(Some);
        }
        let choice = match (self.kernel, self.tau) {
            (Some(k), _) => k,
            (None, Some(_)) => KernelChoice::Gaussian,
            (None, None) => return Ok(None),
        };
        match choice {
            KernelChoice::Gaussian => {
                let tau = self.tau.ok_or_else(|| Error::InvalidKernel("the gaussian kernel needs --tau".into()))?;
                match self.cutoff {
                    Some(c) => KernelSpec::truncated_gaussian(tau, c),
                    None => KernelSpec::gaussian(tau),
                }
                .map(Some)
            }
            KernelChoice::ExampleOne => {
                if self.tau.is_some() || self.cutoff.is_some() {
                    return Err(Error::InvalidKernel("example-one takes no --tau or --cutoff".into()));
                }
                Ok(Some(KernelSpec::example_one()))
            }
        }
    }

    fn require(&self) -> Result<KernelSpec> {
        self.resolve()?
            .ok_or_else(|| Error::InvalidKernel("a kernel is required (--kernel/--tau or --kernel-file)".into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Blurring,
    Nonblurring,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Blurring => Mode::Blurring,
            ModeArg::Nonblurring => Mode::Nonblurring,
        }
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Points CSV.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Result JSON.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Optional trace CSV (iteration, max_displacement, radius, std_1..std_p).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Optional CSV of every snapshot (iteration, point, x_1..x_p, weight), for `diagnose`.
    #[arg(long)]
    pub positions: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "blurring")]
    pub mode: ModeArg,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = DEFAULT_STOP_DISPLACEMENT)]
    pub stop_displacement: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = DEFAULT_MERGE_TOLERANCE)]
    pub merge_tolerance: f64,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long)]
    pub sigma0: f64,
    #[arg(long)]
    pub tau: f64,
    #[arg(long)]
    pub steps: usize,
    /// CSV destination (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Efficiency,
    Robustness,
    ConvergenceRate,
    Consistency,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Kernel bandwidth (default: 1 for efficiency, robustness and consistency, 2 for convergence-rate).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Replications (default depends on the kind).
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, env = "BLURSHIFT_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Points per sample.
    #[arg(long)]
    pub points: Option<usize>,
    /// Report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Plot-ready long-format CSV.
    #[arg(long, value_name = "PATH")]
    pub emit_csv: Option<PathBuf>,
}

impl ExperimentArgs {
    pub fn config(&self) -> ExperimentConfig {
        let mut c = match self.kind {
            KindArg::Efficiency => ExperimentConfig::efficiency(self.tau.unwrap_or(1.0)),
            KindArg::Robustness => ExperimentConfig::robustness(self.tau.unwrap_or(1.0)),
            KindArg::ConvergenceRate => ExperimentConfig::convergence_rate(),
            KindArg::Consistency => ExperimentConfig::consistency(),
        };
        if let Some(t) = self.tau {
            c.tau = t;
        }
        if let Some(r) = self.reps {
            c.replications = r;
        }
        if let Some(n) = self.points {
            c.n_points = n;
        }
        c.seed = self.seed;
        c
    }
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Trace CSV written by `cluster --trace`.
    #[arg(long)]
    pub trace: PathBuf,
    /// Positions CSV written by `cluster --positions`; enables hull, projection and influence checks.
    #[arg(long)]
    pub positions: Option<PathBuf>,
    /// Kernel of the run, needed for the influence check.
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = DEFAULT_MERGE_TOLERANCE)]
    pub merge_tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_DIRECTIONS)]
    pub directions: usize,
    #[arg(long, default_value_t = DEFAULT_DIRECTION_SEED)]
    pub direction_seed: u64,
    /// Report JSON (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// Offsets of the three starting points inside their windows.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.1, 0.1, 0.1])]
    pub deltas: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
    /// Smallest |x1| the schedule keeps up.
    #[arg(long, default_value_t = OscillatingSchedule::default().delta_min)]
    pub delta_min: f64,
    /// Fraction of the gap between the outer points kept on each step.
    #[arg(long, default_value_t = OscillatingSchedule::default().gap_retention)]
    pub gap_retention: f64,
    /// CSV destination (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
}

#[derive(Debug, Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

fn error_json(code: &str, message: String) -> String {
    serde_json::to_string(&ErrorReport { error: ErrorBody { code, message } }).expect("error report serializes")
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit status. Errors go to stderr as JSON.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let message = e.render().to_string().trim_end().to_string();
            eprintln!("{}", error_json("usage", message));
            return USAGE_EXIT_CODE;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(e.code(), e.to_string()));
            e.exit_code()
        }
    }
}

/// Runs a parsed command line, inside a dedicated worker pool when
/// `--workers` is given.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.workers {
        Some(0) => Err(Error::InvalidArgument("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start {n} workers: {e}")))?
            .install(|| dispatch(&cli.command)),
        None => dispatch(&cli.command),
    }
}

pub fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Cluster(a) => cluster(a),
        Command::Theory(a) => theory(a),
        Command::Experiment(a) => experiment(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Counterexample(a) => counterexample(a),
    }
}

fn to_output<F>(path: Option<&Path>, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => io::with_file(p, |w| write(w)),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn cluster(a: &ClusterArgs) -> Result<()> {
    let kernel = a.kernel.require()?;
    let level = if a.positions.is_some() { TraceLevel::Full } else { TraceLevel::Summary };
    let config = RunConfig::new(a.mode.into(), kernel)
        .with_stop_displacement(a.stop_displacement)
        .with_max_iterations(a.max_iterations)
        .with_trace(level);
    config.validate()?;
    if !(a.merge_tolerance > 0.0 && a.merge_tolerance.is_finite()) {
        return Err(Error::InvalidArgument(format!("merge tolerance must be positive, got {}", a.merge_tolerance)));
    }

    let points = io::read_points_file(&a.input)?;
    let outcome = run(&points, &config)?;
    let clusters = outcome.clusters(a.merge_tolerance)?;
    let settings = io::ClusterRunSettings {
        run: config,
        merge_tolerance: a.merge_tolerance,
        input: Some(a.input.display().to_string()),
    };
    io::write_json_file(&io::ClusterOutput::new(&outcome, clusters, settings), &a.output)?;
    if let Some(path) = &a.trace {
        io::with_file(path, |w| io::write_trace(&outcome.trace, w))?;
    }
    if let Some(path) = &a.positions {
        io::with_file(path, |w| io::write_positions(&outcome.trace, w))?;
    }
    Ok(())
}

fn theory(a: &TheoryArgs) -> Result<()> {
    let rows = std_table(a.sigma0, a.tau, a.steps)?;
    to_output(a.output.as_deref(), |w| io::write_theory(&rows, w))
}

fn experiment(a: &ExperimentArgs) -> Result<()> {
    let config = a.config();
    let report = run_experiment(&config)?;
    io::write_json_file(&report, &a.out)?;
    if let Some(path) = &a.emit_csv {
        io::with_file(path, |w| match &report {
            ExperimentReport::Table(t) => io::write_table_long(t, w),
            ExperimentReport::ConvergenceRate(c) => io::write_series(c, w),
            ExperimentReport::Consistency(c) => io::write_consistency(c, w),
        })?;
    }
    Ok(())
}

/// JSON verdict written by `diagnose`. Checks that need positions (or a
/// kernel) are `null` when those inputs were not given.
#[derive(Debug, Serialize)]
pub struct DiagnoseReport {
    pub trace: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    pub merge_tolerance: f64,
    pub iterations: usize,
    pub dim: usize,
    pub radius: RadiusTrace,
    pub hull: Option<HullTrace>,
    pub directional: Option<DirectionalReport>,
    /// Sizes of the clusters in the last snapshot.
    pub cluster_sizes: Option<Vec<usize>>,
    pub influence: Option<InfluenceReport>,
    /// True when every check that ran passed.
    pub passed: bool,
}

fn diagnose(a: &DiagnoseArgs) -> Result<()> {
    let kernel = a.kernel.resolve()?;
    let mut trace = io::read_trace_file(&a.trace)?;
    if let Some(path) = &a.positions {
        io::attach_positions(&mut trace, io::read_positions_file(path)?)?;
    }
    let dim = trace.dim().unwrap_or(0);
    let radius = radius_trace(&trace);

    let mut hull = None;
    let mut directional = None;
    let mut cluster_sizes = None;
    let mut influence = None;
    if a.positions.is_some() {
        if dim <= 2 {
            hull = Some(hull_trace(&trace)?);
        }
        directional = Some(directional_containment(&trace, a.directions, a.direction_seed)?);
        let last = trace.records.last().and_then(|r| r.positions.as_ref()).ok_or(Error::EmptyInput)?;
        let clusters = extract_clusters(last, a.merge_tolerance)?;
        if let Some(k) = &kernel {
            influence = Some(influence_decay(&trace, k, &clusters)?);
        }
        cluster_sizes = Some(clusters.sizes);
    }

    let passed = radius.nonincreasing
        && hull.as_ref().is_none_or(|h| h.nested)
        && directional.as_ref().is_none_or(|d| d.contained);
    let report = DiagnoseReport {
        trace: a.trace.display().to_string(),
        positions: a.positions.as_ref().map(|p| p.display().to_string()),
        kernel,
        merge_tolerance: a.merge_tolerance,
        iterations: trace.len(),
        dim,
        radius,
        hull,
        directional,
        cluster_sizes,
        influence,
        passed,
    };
    to_output(a.output.as_deref(), |w| io::write_json(&report, w))
}

fn counterexample(a: &CounterexampleArgs) -> Result<()> {
    let deltas: [f64; 3] = a
        .deltas
        .as_slice()
        .try_into()
        .map_err(|_| Error::InvalidArgument("--deltas takes exactly three values".into()))?;
    let schedule = OscillatingSchedule { delta_min: a.delta_min, gap_retention: a.gap_retention };
    let trace = run_counterexample_with(deltas, a.iterations, schedule)?;
    to_output(a.output.as_deref(), |w| io::write_counterexample(&trace, w))
}
