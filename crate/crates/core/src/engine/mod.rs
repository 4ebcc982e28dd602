//! Blurring and nonblurring mean-shift iteration.
//!
//! The blurring process repeatedly replaces every point by a kernel-weighted
//! average of the *current* points, so the data set itself contracts. The
//! nonblurring process moves a separate set of centers (by default a copy of
//! the data) against the *fixed* original data.
//!
//! A run stops once the largest per-point displacement of an iteration falls
//! below `stop_displacement`, or after `max_iterations`. Running out of
//! iterations is not an error: the outcome is reported as not converged.

mod cluster;
mod points;
mod step;
mod trace;

use serde::{Deserialize, Serialize};

pub use cluster::{extract_clusters, majority_mode, ClusterResult};
pub use points::PointSet;
pub use step::{blurring_step, nonblurring_step};
pub use trace::{IterationRecord, IterationTrace, TraceLevel};

pub(crate) use points::squared_distance;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

pub const DEFAULT_STOP_DISPLACEMENT: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_MERGE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Blurring,
    Nonblurring,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Blurring => "blurring",
            Mode::Nonblurring => "nonblurring",
        })
    }
}

/// Settings for one engine run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub kernel: KernelSpec,
    pub stop_displacement: f64,
    pub max_iterations: usize,
    pub trace_level: TraceLevel,
}

impl RunConfig {
    pub fn new(mode: Mode, kernel: KernelSpec) -> Self {
        Self {
            mode,
            kernel,
            stop_displacement: DEFAULT_STOP_DISPLACEMENT,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            trace_level: TraceLevel::Summary,
        }
    }

    pub fn blurring(kernel: KernelSpec) -> Self {
        Self::new(Mode::Blurring, kernel)
    }

    pub fn nonblurring(kernel: KernelSpec) -> Self {
        Self::new(Mode::Nonblurring, kernel)
    }

    pub fn with_stop_displacement(mut self, eps: f64) -> Self {
        self.stop_displacement = eps;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_trace(mut self, level: TraceLevel) -> Self {
        self.trace_level = level;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stop_displacement > 0.0 && self.stop_displacement.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "stop_displacement must be positive, got {}",
                self.stop_displacement
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Final positions of a run together with its trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub points: PointSet,
    pub trace: IterationTrace,
    pub converged: bool,
    pub iterations_used: usize,
}

impl RunOutcome {
    /// Groups the final positions and stamps the run's convergence status.
    pub fn clusters(&self, merge_tolerance: f64) -> Result<ClusterResult> {
        let mut result = extract_clusters(&self.points, merge_tolerance)?;
        result.converged = self.converged;
        result.iterations_used = self.iterations_used;
        Ok(result)
    }
}

/// Runs the configured process. In nonblurring mode the centers start at the data.
pub fn run(points: &PointSet, config: &RunConfig) -> Result<RunOutcome> {
    match config.mode {
        Mode::Blurring => iterate(points, config, |current| Ok(blurring_step(current, &config.kernel))),
        Mode::Nonblurring => run_nonblurring(points, points, config),
    }
}

/// Nonblurring run with separately supplied starting centers.
pub fn run_nonblurring(data: &PointSet, centers: &PointSet, config: &RunConfig) -> Result<RunOutcome> {
    if centers.dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), found: centers.dim() });
    }
    iterate(centers, config, |current| nonblurring_step(current, data, &config.kernel))
}

fn iterate<F>(start: &PointSet, config: &RunConfig, mut step: F) -> Result<RunOutcome>
where
    F: FnMut(&PointSet) -> Result<PointSet>,
{
    config.validate()?;
    let full = config.trace_level == TraceLevel::Full;
    let mut trace = IterationTrace::default();
    if config.trace_level != TraceLevel::None {
        trace.records.push(IterationRecord::capture(0, start, None, full));
    }

    let mut current = start.clone();
    let mut converged = false;
    let mut iterations_used = 0;
    while iterations_used < config.max_iterations {
        let next = step(&current)?;
        iterations_used += 1;
        let displacement = max_displacement(&current, &next);
        current = next;
        if config.trace_level != TraceLevel::None {
            trace.records.push(IterationRecord::capture(iterations_used, &current, Some(displacement), full));
        }
        if displacement < config.stop_displacement {
            converged = true;
            break;
        }
    }
    Ok(RunOutcome { points: current, trace, converged, iterations_used })
}

/// Largest Euclidean distance between corresponding points of two snapshots.
pub fn max_displacement(before: &PointSet, after: &PointSet) -> f64 {
    before
        .rows()
        .zip(after.rows())
        .map(|(a, b)| squared_distance(a, b))
        .fold(0.0, f64::max)
        .sqrt()
}
