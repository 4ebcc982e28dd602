//! Empirical checks of the convergence behaviour on engine traces.
//!
//! With fixed weights and a PDD kernel the blurring process shrinks the
//! convex hull of the data monotonically, so the diameter never grows, and the
//! influence between points heading to different limits dies out. The
//! functions here measure those properties on recorded runs. Hulls are built
//! exactly for `p <= 2`; in higher dimensions the radius trace and random
//! projections stand in for them.
//!
//! [`counterexample`] reproduces the oscillation that appears when weights
//! are re-assigned at every iteration.

pub mod counterexample;
mod hull;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

pub use counterexample::{
    adaptive_displacements, run_adaptive, run_counterexample, run_counterexample_with, AdaptiveRun, CounterexampleRow,
    CounterexampleTrace, OscillatingSchedule, WeightSchedule,
};
pub use hull::{hull_trace, monotone_chain, polygon_contains, Hull, HullTrace};

use crate::engine::{squared_distance, ClusterResult, IterationTrace, PointSet};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Relative slack for containment checks, scaled by coordinate magnitude.
pub const CONTAINMENT_RTOL: f64 = 1e-12;
pub const DEFAULT_DIRECTIONS: usize = 20;
pub const DEFAULT_DIRECTION_SEED: u64 = 0x5eed;

fn rounding_tolerance(snapshots: &[&PointSet]) -> f64 {
    let scale = snapshots.iter().map(|p| p.max_abs_coordinate()).fold(1.0, f64::max);
    CONTAINMENT_RTOL * scale
}

/// Diameter per iteration with a monotonicity verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusTrace {
    pub radii: Vec<f64>,
    pub nonincreasing: bool,
    /// First iteration whose radius exceeds its predecessor by more than the tolerance.
    pub first_increase: Option<usize>,
    pub tolerance: f64,
}

/// Checks that the largest pairwise distance never grows.
pub fn radius_trace(trace: &IterationTrace) -> RadiusTrace {
    let radii = trace.radii();
    let scale = trace
        .records
        .iter()
        .map(|r| r.radius + r.mean.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
        .fold(1.0, f64::max);
    let tolerance = CONTAINMENT_RTOL * scale;
    let first_increase = radii.windows(2).position(|w| w[1] > w[0] + tolerance).map(|i| i + 1);
    RadiusTrace { radii, nonincreasing: first_increase.is_none(), first_increase, tolerance }
}

/// Hull containment tested along random unit directions: for every direction
/// `u`, `max_i <x_i', u>` must not exceed `max_i <x_i, u>`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionalReport {
    pub directions: usize,
    pub seed: u64,
    pub contained: bool,
    pub first_violation: Option<usize>,
}

pub fn directional_containment(trace: &IterationTrace, directions: usize, seed: u64) -> Result<DirectionalReport> {
    let snapshots = trace
        .positions()
        .ok_or_else(|| Error::InvalidArgument("directional containment needs a full-level trace".into()))?;
    let dim = trace.dim().unwrap_or(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> = (0..directions)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let tolerance = rounding_tolerance(&snapshots);
    let support = |p: &PointSet, u: &[f64]| {
        p.rows()
            .map(|r| r.iter().zip(u).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let first_violation = snapshots
        .windows(2)
        .position(|w| dirs.iter().any(|u| support(w[1], u) > support(w[0], u) + tolerance))
        .map(|i| i + 1);
    Ok(DirectionalReport { directions, seed, contained: first_violation.is_none(), first_violation })
}

/// Largest influence between two clusters at one snapshot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterPairInfluence {
    pub first: usize,
    pub second: usize,
    pub max_influence: f64,
}

/// Cross-cluster influence of a converged run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfluenceReport {
    /// True when there is a single cluster and nothing to measure.
    pub vacuous: bool,
    /// Largest cross-cluster influence at the final iteration.
    pub final_max: Option<f64>,
    /// Largest cross-cluster influence at every recorded iteration.
    pub per_iteration_max: Vec<f64>,
    pub pairs: Vec<ClusterPairInfluence>,
}

/// Largest influence `f(|x_i - x_j|)` over points in different clusters, per
/// pair of clusters.
pub fn cross_cluster_influence(
    points: &PointSet,
    kernel: &KernelSpec,
    labels: &[usize],
) -> Result<Vec<ClusterPairInfluence>> {
    if labels.len() != points.len() {
        return Err(Error::InvalidArgument(format!("{} labels for {} points", labels.len(), points.len())));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut best = vec![0.0f64; k * k];
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (a, b) = (labels[i].min(labels[j]), labels[i].max(labels[j]));
            if a != b {
                let f = kernel.profile(squared_distance(points.point(i), points.point(j)).sqrt());
                best[a * k + b] = best[a * k + b].max(f);
            }
        }
    }
    Ok((0..k)
        .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
        .map(|(a, b)| ClusterPairInfluence { first: a, second: b, max_influence: best[a * k + b] })
        .collect())
}

/// Measures how strongly points in different final clusters still influence
/// each other, at every recorded iteration. Needs a full-level trace.
pub fn influence_decay(trace: &IterationTrace, kernel: &KernelSpec, result: &ClusterResult) -> Result<InfluenceReport> {
    if result.num_clusters() < 2 {
        return Ok(InfluenceReport { vacuous: true, final_max: None, per_iteration_max: vec![], pairs: vec![] });
    }
    let snapshots = trace
        .positions()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::InvalidArgument("influence decay needs a full-level trace".into()))?;
    let mut per_iteration_max = Vec::with_capacity(snapshots.len());
    let mut pairs = Vec::new();
    for snapshot in &snapshots {
        pairs = cross_cluster_influence(snapshot, kernel, &result.labels)?;
        per_iteration_max.push(pairs.iter().map(|p| p.max_influence).fold(0.0, f64::max));
    }
    Ok(InfluenceReport { vacuous: false, final_max: per_iteration_max.last().copied(), per_iteration_max, pairs })
}
