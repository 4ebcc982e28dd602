//! Seeded Monte Carlo studies of the blurring and nonblurring estimators.
//!
//! Every replication draws from its own ChaCha stream: the master seed fixes
//! the key and the replication index picks the stream. Replications run in
//! parallel and are collected in index order, so a report depends only on the
//! configuration, never on the number of worker threads.
//!
//! A replication whose run hits `max_iterations` before the displacement
//! criterion is kept in the per-replication records but excluded from the
//! affected statistic; the number excluded is part of the report.

mod sampling;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use sampling::{sample_gaussian, sample_mixture, sample_standard_normal, Mixture, MixtureComponent, MixtureSample};

use crate::engine::{
    majority_mode, run, Mode, RunConfig, TraceLevel, DEFAULT_MAX_ITERATIONS, DEFAULT_MERGE_TOLERANCE,
    DEFAULT_STOP_DISPLACEMENT,
};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_REPLICATIONS: usize = 2000;
pub const DEFAULT_POINTS: usize = 100;
/// Robustness runs cut the Gaussian off at this many bandwidths.
pub const DEFAULT_TRUNCATION: f64 = 3.0;
pub const CONSISTENCY_SIZES: [usize; 3] = [100, 400, 1600];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Efficiency,
    Robustness,
    ConvergenceRate,
    Consistency,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExperimentKind::Efficiency => "efficiency",
            ExperimentKind::Robustness => "robustness",
            ExperimentKind::ConvergenceRate => "convergence_rate",
            ExperimentKind::Consistency => "consistency",
        })
    }
}

/// Engine parameters shared by every run of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineSettings {
    pub stop_displacement: f64,
    pub max_iterations: usize,
    pub merge_tolerance: f64,
    /// Cut the Gaussian kernel off beyond this many bandwidths; `None` keeps
    /// the full Gaussian.
    pub truncation: Option<f64>,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self {
            stop_displacement: DEFAULT_STOP_DISPLACEMENT,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            merge_tolerance: DEFAULT_MERGE_TOLERANCE,
            truncation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n_points: usize,
    pub tau: f64,
    pub replications: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<Mixture>,
    #[serde(default)]
    pub engine: EngineSettings,
    /// Sample sizes swept by the consistency study.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sample_sizes: Vec<usize>,
}

impl ExperimentConfig {
    fn base(kind: ExperimentKind, tau: f64) -> Self {
        Self {
            kind,
            n_points: DEFAULT_POINTS,
            tau,
            replications: DEFAULT_REPLICATIONS,
            seed: DEFAULT_SEED,
            mixture: None,
            engine: EngineSettings::default(),
            sample_sizes: Vec::new(),
        }
    }

    /// 100 standard normal points, full Gaussian kernel.
    pub fn efficiency(tau: f64) -> Self {
        Self::base(ExperimentKind::Efficiency, tau)
    }

    /// 95 + 5 contaminated sample, Gaussian kernel truncated at three bandwidths.
    pub fn robustness(tau: f64) -> Self {
        let mut c = Self::base(ExperimentKind::Robustness, tau);
        c.mixture = Some(Mixture::contaminated());
        c.engine.truncation = Some(DEFAULT_TRUNCATION);
        c
    }

    /// One replication of 100 standard normal points at `tau = 2`.
    pub fn convergence_rate() -> Self {
        let mut c = Self::base(ExperimentKind::ConvergenceRate, 2.0);
        c.replications = 1;
        c
    }

    /// Blurring limit over growing samples at `tau = 1`, 500 replications each.
    pub fn consistency() -> Self {
        let mut c = Self::base(ExperimentKind::Consistency, 1.0);
        c.replications = 500;
        c.sample_sizes = CONSISTENCY_SIZES.to_vec();
        c
    }

    pub fn with_replications(mut self, r: usize) -> Self {
        self.replications = r;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {}", self.tau)));
        }
        if self.replications == 0 {
            return Err(Error::InvalidArgument("replications must be at least 1".into()));
        }
        if self.n_points == 0 {
            return Err(Error::InvalidArgument("n_points must be at least 1".into()));
        }
        if let Some(m) = &self.mixture {
            m.counts(self.n_points)?;
        }
        if let Some(t) = self.engine.truncation {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument(format!("truncation must be positive, got {t}")));
            }
        }
        if !(self.engine.merge_tolerance > 0.0) {
            return Err(Error::InvalidArgument("merge_tolerance must be positive".into()));
        }
        if self.kind == ExperimentKind::Consistency && self.sample_sizes.contains(&0) {
            return Err(Error::InvalidArgument("sample sizes must be positive".into()));
        }
        self.run_config(Mode::Blurring)?.validate()
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        match self.engine.truncation {
            Some(m) => KernelSpec::truncated_gaussian(self.tau, m * self.tau),
            None => KernelSpec::gaussian(self.tau),
        }
    }

    fn run_config(&self, mode: Mode) -> Result<RunConfig> {
        Ok(RunConfig::new(mode, self.kernel()?)
            .with_stop_displacement(self.engine.stop_displacement)
            .with_max_iterations(self.engine.max_iterations)
            .with_trace(TraceLevel::None))
    }

    /// Random stream for one replication.
    pub fn stream(&self, replication: usize) -> ChaCha8Rng {
        self.stream_at(0, replication)
    }

    fn stream_at(&self, block: usize, replication: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((block as u64) << 32) | replication as u64);
        rng
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    /// Sample standard deviation with the `count - 1` denominator.
    pub std: f64,
    pub count: usize,
}

pub fn summarize(values: &[f64]) -> Result<SummaryStat> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewValues(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(SummaryStat { mean, std: var.sqrt(), count: n })
}

fn summarize_included(values: &[f64], excluded: usize) -> Result<SummaryStat> {
    summarize(values).map_err(|e| match e {
        Error::TooFewValues(_) => Error::NoReplications { excluded },
        e => e,
    })
}

/// Location estimates from one replication.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub sample_mean: f64,
    /// Center of the largest blurring cluster.
    pub blurring: f64,
    pub blurring_converged: bool,
    pub blurring_clusters: usize,
    /// Center of the largest nonblurring cluster.
    pub nonblurring: f64,
    pub nonblurring_converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub tau: f64,
    pub sample_mean: SummaryStat,
    pub blurring: SummaryStat,
    pub nonblurring: SummaryStat,
    pub excluded_blurring: usize,
    pub excluded_nonblurring: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub config: ExperimentConfig,
    pub row: TableRow,
    pub replications: Vec<ReplicationRecord>,
}

impl TableReport {
    /// Long-format values of every included statistic: (statistic, replication, value).
    pub fn long_format(&self) -> Vec<(&'static str, usize, f64)> {
        let mut out = Vec::with_capacity(3 * self.replications.len());
        for r in &self.replications {
            out.push(("sample_mean", r.replication, r.sample_mean));
        }
        for r in self.replications.iter().filter(|r| r.blurring_converged) {
            out.push(("blurring", r.replication, r.blurring));
        }
        for r in self.replications.iter().filter(|r| r.nonblurring_converged) {
            out.push(("nonblurring", r.replication, r.nonblurring));
        }
        out
    }
}

fn replicate(config: &ExperimentConfig, replication: usize) -> Result<ReplicationRecord> {
    let mut rng = config.stream(replication);
    let data = match &config.mixture {
        Some(m) => sample_mixture(m, config.n_points, &mut rng)?.points,
        None => sample_standard_normal(config.n_points, &mut rng)?,
    };
    let sample_mean = data.mean()[0];

    let blur = run(&data, &config.run_config(Mode::Blurring)?)?;
    let blur_clusters = blur.clusters(config.engine.merge_tolerance)?;
    let nonblur = run(&data, &config.run_config(Mode::Nonblurring)?)?;
    let nonblur_clusters = nonblur.clusters(config.engine.merge_tolerance)?;
    Ok(ReplicationRecord {
        replication,
        sample_mean,
        blurring: majority_mode(&blur_clusters)?[0],
        blurring_converged: blur.converged,
        blurring_clusters: blur_clusters.num_clusters(),
        nonblurring: majority_mode(&nonblur_clusters)?[0],
        nonblurring_converged: nonblur.converged,
    })
}

fn run_table(config: &ExperimentConfig) -> Result<TableReport> {
    config.validate()?;
    let replications: Vec<ReplicationRecord> =
        (0..config.replications).into_par_iter().map(|r| replicate(config, r)).collect::<Result<_>>()?;

    let means: Vec<f64> = replications.iter().map(|r| r.sample_mean).collect();
    let blur: Vec<f64> = replications.iter().filter(|r| r.blurring_converged).map(|r| r.blurring).collect();
    let nonblur: Vec<f64> = replications.iter().filter(|r| r.nonblurring_converged).map(|r| r.nonblurring).collect();
    let excluded_blurring = replications.len() - blur.len();
    let excluded_nonblurring = replications.len() - nonblur.len();
    let row = TableRow {
        tau: config.tau,
        sample_mean: summarize(&means)?,
        blurring: summarize_included(&blur, excluded_blurring)?,
        nonblurring: summarize_included(&nonblur, excluded_nonblurring)?,
        excluded_blurring,
        excluded_nonblurring,
    };
    Ok(TableReport { config: config.clone(), row, replications })
}

fn expect_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if config.kind != kind {
        return Err(Error::InvalidArgument(format!("expected a {kind} configuration, got {}", config.kind)));
    }
    Ok(())
}

/// Sample mean against the blurring and nonblurring limits on clean Gaussian data.
pub fn run_efficiency(config: &ExperimentConfig) -> Result<TableReport> {
    expect_kind(config, ExperimentKind::Efficiency)?;
    run_table(config)
}

/// The same comparison on contaminated data, using the largest cluster.
pub fn run_robustness(config: &ExperimentConfig) -> Result<TableReport> {
    expect_kind(config, ExperimentKind::Robustness)?;
    if config.mixture.is_none() {
        return Err(Error::InvalidArgument("robustness runs need a mixture".into()));
    }
    run_table(config)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub iteration: usize,
    pub mean: f64,
    pub std: f64,
    /// `None` once the spread has collapsed to exactly zero.
    pub log10_std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    pub mode: Mode,
    pub replication: usize,
    pub converged: bool,
    pub points: Vec<SeriesPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub series: Vec<ConvergenceSeries>,
}

/// Per-iteration mean and spread of both processes on the same sample.
pub fn run_convergence_rate(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    expect_kind(config, ExperimentKind::ConvergenceRate)?;
    config.validate()?;
    let per_rep: Vec<Vec<ConvergenceSeries>> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let data = sample_standard_normal(config.n_points, &mut config.stream(r))?;
            [Mode::Blurring, Mode::Nonblurring]
                .into_iter()
                .map(|mode| {
                    let out = run(&data, &config.run_config(mode)?.with_trace(TraceLevel::Summary))?;
                    let points = out
                        .trace
                        .records
                        .iter()
                        .map(|rec| SeriesPoint {
                            iteration: rec.iteration,
                            mean: rec.mean[0],
                            std: rec.std[0],
                            log10_std: (rec.std[0] > 0.0).then(|| rec.std[0].log10()),
                        })
                        .collect();
                    Ok(ConvergenceSeries { mode, replication: r, converged: out.converged, points })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(ConvergenceReport { config: config.clone(), series: per_rep.into_iter().flatten().collect() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub n_points: usize,
    pub blurring: SummaryStat,
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ConsistencyRow>,
}

/// Spread of the blurring limit on standard normal samples of growing size.
pub fn run_consistency(config: &ExperimentConfig) -> Result<ConsistencyReport> {
    expect_kind(config, ExperimentKind::Consistency)?;
    config.validate()?;
    let sizes = if config.sample_sizes.is_empty() { vec![config.n_points] } else { config.sample_sizes.clone() };
    let run_config = config.run_config(Mode::Blurring)?;
    let rows = sizes
        .iter()
        .enumerate()
        .map(|(block, &n)| {
            let outcomes: Vec<(f64, bool)> = (0..config.replications)
                .into_par_iter()
                .map(|r| {
                    let data = sample_standard_normal(n, &mut config.stream_at(block, r))?;
                    let out = run(&data, &run_config)?;
                    let clusters = out.clusters(config.engine.merge_tolerance)?;
                    Ok((majority_mode(&clusters)?[0], out.converged))
                })
                .collect::<Result<_>>()?;
            let kept: Vec<f64> = outcomes.iter().filter(|o| o.1).map(|o| o.0).collect();
            let excluded = outcomes.len() - kept.len();
            Ok(ConsistencyRow { n_points: n, blurring: summarize_included(&kept, excluded)?, excluded })
        })
        .collect::<Result<_>>()?;
    Ok(ConsistencyReport { config: config.clone(), rows })
}

/// Output of any experiment kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExperimentReport {
    Table(TableReport),
    ConvergenceRate(ConvergenceReport),
    Consistency(ConsistencyReport),
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    Ok(match config.kind {
        ExperimentKind::Efficiency => ExperimentReport::Table(run_efficiency(config)?),
        ExperimentKind::Robustness => ExperimentReport::Table(run_robustness(config)?),
        ExperimentKind::ConvergenceRate => ExperimentReport::ConvergenceRate(run_convergence_rate(config)?),
        ExperimentKind::Consistency => ExperimentReport::Consistency(run_consistency(config)?),
    })
}
