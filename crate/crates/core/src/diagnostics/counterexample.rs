//! Non-convergence under iteration-dependent weights.
//!
//! Three points on the line, `x1 = δ1`, `x2 = 1/2 + δ2`, `x3 = -1/2 - δ3`,
//! under the kernel that is 1 at zero, 1/2 up to distance 1 and 0 beyond.
//! `x2` and `x3` never see each other, while `x1` sees both. Re-weighting
//! `x2` or `x3` at every step drags `x1` back and forth across zero, so the
//! run never settles even though each individual step is an ordinary
//! blurring step.

use serde::{Deserialize, Serialize};

use crate::engine::{blurring_step, max_displacement, run, PointSet, RunConfig, RunOutcome};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

pub const DEFAULT_DELTA_MIN: f64 = 0.05;
pub const DEFAULT_GAP_RETENTION: f64 = 0.9;
const MAX_DOUBLINGS: usize = 1000;
const BISECTION_STEPS: usize = 200;

/// Weights for the next step as a function of the iteration and the current
/// positions.
pub trait WeightSchedule {
    fn weights(&mut self, iteration: usize, positions: &PointSet, kernel: &KernelSpec) -> Result<Vec<f64>>;
}

/// Snapshots of a run with adaptive weights. Snapshot `t` carries the
/// weights that produced it; snapshot 0 carries the starting weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRun {
    pub snapshots: Vec<PointSet>,
}

/// Runs `iterations` blurring steps, asking `schedule` for fresh weights
/// before each one.
pub fn run_adaptive<S: WeightSchedule>(
    start: &PointSet,
    kernel: &KernelSpec,
    schedule: &mut S,
    iterations: usize,
) -> Result<AdaptiveRun> {
    let mut snapshots = Vec::with_capacity(iterations + 1);
    snapshots.push(start.clone());
    for t in 1..=iterations {
        let current = &snapshots[t - 1];
        let weights = schedule.weights(t, current, kernel)?;
        if weights.len() != current.len() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::CounterexampleBreakdown {
                iteration: t,
                reason: "schedule produced non-positive or non-finite weights".into(),
            });
        }
        let next = blurring_step(&current.with_weights(weights)?, kernel);
        snapshots.push(next);
    }
    Ok(AdaptiveRun { snapshots })
}

/// Weight rule that pushes the middle point to alternate sides of zero.
///
/// The point on the side `x1` should move to is the leading point. Both outer
/// weights start at 1 and are doubled until each outer point keeps at least
/// `gap_retention` of its distance to the window `[-1/2, 1/2]` and `x1` lands
/// at least `delta_min` past zero on the target side. If the leading weight
/// then overshoots, so that `x1` loses contact with one of the outer points,
/// it is bisected back between the last two doublings.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatingSchedule {
    pub delta_min: f64,
    pub gap_retention: f64,
}

impl Default for OscillatingSchedule {
    fn default() -> Self {
        Self { delta_min: DEFAULT_DELTA_MIN, gap_retention: DEFAULT_GAP_RETENTION }
    }
}

struct Layout {
    x: [f64; 3],
}

impl Layout {
    fn of(points: &PointSet) -> Self {
        let c = points.coords();
        Self { x: [c[0], c[1], c[2]] }
    }

    fn gaps(&self) -> [f64; 2] {
        [self.x[1] - 0.5, -0.5 - self.x[2]]
    }

    fn in_contact(&self) -> bool {
        self.x[1] - self.x[0] < 1.0 && self.x[0] - self.x[2] < 1.0
    }
}

impl OscillatingSchedule {
    fn trial(points: &PointSet, kernel: &KernelSpec, w: [f64; 3]) -> Result<Layout> {
        Ok(Layout::of(&blurring_step(&points.with_weights(w.to_vec())?, kernel)))
    }
}

impl WeightSchedule for OscillatingSchedule {
    fn weights(&mut self, iteration: usize, positions: &PointSet, kernel: &KernelSpec) -> Result<Vec<f64>> {
        let breakdown = |reason: &str| Error::CounterexampleBreakdown { iteration, reason: reason.into() };
        if positions.len() != 3 || positions.dim() != 1 {
            return Err(Error::InvalidArgument("the oscillating schedule needs three points on a line".into()));
        }
        let now = Layout::of(positions);
        let gaps = now.gaps();
        if gaps.iter().any(|&g| g <= 0.0) || !now.in_contact() {
            return Err(breakdown("outer points left the admissible window"));
        }
        let target = if now.x[0] > 0.0 { -1.0 } else { 1.0 };
        // index 1 pulls x1 up, index 2 pulls it down
        let (lead, other) = if target > 0.0 { (1, 2) } else { (2, 1) };
        let mut w = [1.0, 1.0, 1.0];

        // x_other' depends only on x1 and w_other, so it is solved on its own
        let mut doublings = 0;
        while Self::trial(positions, kernel, w)?.gaps()[other - 1] < self.gap_retention * gaps[other - 1] {
            w[other] *= 2.0;
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(breakdown("no weight keeps the trailing point outside the window"));
            }
        }

        let lower_ok = |l: &Layout| {
            l.gaps()[lead - 1] >= self.gap_retention * gaps[lead - 1] && target * l.x[0] >= self.delta_min
        };
        let mut doublings = 0;
        let mut next = Self::trial(positions, kernel, w)?;
        while !lower_ok(&next) {
            w[lead] *= 2.0;
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(breakdown("no weight moves x1 far enough"));
            }
            next = Self::trial(positions, kernel, w)?;
        }
        if next.in_contact() {
            return Ok(w.to_vec());
        }
        if doublings == 0 {
            return Err(breakdown("unit weights already overshoot"));
        }

        let (mut lo, mut hi) = (w[lead] / 2.0, w[lead]);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            w[lead] = mid;
            let l = Self::trial(positions, kernel, w)?;
            if !lower_ok(&l) {
                lo = mid;
            } else if !l.in_contact() {
                hi = mid;
            } else {
                return Ok(w.to_vec());
            }
        }
        Err(breakdown("no leading weight keeps x1 in contact with both outer points"))
    }
}

/// One row of the counterexample output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub t: usize,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleTrace {
    pub deltas: [f64; 3],
    pub delta_min: f64,
    /// Row `t` holds positions after step `t` and the weights used for it.
    pub rows: Vec<CounterexampleRow>,
}

impl CounterexampleTrace {
    /// Whether `x1` changes sign at every step and stays at least
    /// `delta_min` away from zero.
    pub fn alternates(&self) -> bool {
        self.first_non_alternation().is_none()
    }

    pub fn first_non_alternation(&self) -> Option<usize> {
        self.rows.windows(2).find(|w| !(w[0].x1 * w[1].x1 < 0.0 && w[1].x1.abs() >= self.delta_min)).map(|w| w[1].t)
    }

    /// Largest per-step move of any point; the run converges only if these tend to zero.
    pub fn displacements(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| {
                [(w[0].x1, w[1].x1), (w[0].x2, w[1].x2), (w[0].x3, w[1].x3)]
                    .iter()
                    .map(|(a, b)| (b - a).abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// Continues from the positions of row `t` with that row's weights held
    /// fixed, as an ordinary blurring run.
    pub fn frozen_run(&self, t: usize, config: &RunConfig) -> Result<RunOutcome> {
        let row = self
            .rows
            .get(t)
            .ok_or_else(|| Error::InvalidArgument(format!("no row {t} in a trace of {} rows", self.rows.len())))?;
        let points = PointSet::new(1, vec![row.x1, row.x2, row.x3], vec![row.w1, row.w2, row.w3])?;
        run(&points, config)
    }
}

/// Runs the oscillating three-point construction for `iterations` steps.
pub fn run_counterexample(deltas: [f64; 3], iterations: usize) -> Result<CounterexampleTrace> {
    run_counterexample_with(deltas, iterations, OscillatingSchedule::default())
}

pub fn run_counterexample_with(
    deltas: [f64; 3],
    iterations: usize,
    mut schedule: OscillatingSchedule,
) -> Result<CounterexampleTrace> {
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d < 0.25)) {
        return Err(Error::InvalidArgument(format!("every delta must lie in (0, 1/4), got {d}")));
    }
    if !(schedule.delta_min > 0.0 && schedule.gap_retention > 0.0 && schedule.gap_retention < 1.0) {
        return Err(Error::InvalidArgument("delta_min must be positive and gap_retention in (0, 1)".into()));
    }
    let kernel = KernelSpec::example_one();
    let start = PointSet::from_scalars(&[deltas[0], 0.5 + deltas[1], -0.5 - deltas[2]])?;
    let adaptive = run_adaptive(&start, &kernel, &mut schedule, iterations)?;
    let rows = adaptive
        .snapshots
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let (x, w) = (s.coords(), s.weights());
            CounterexampleRow { t, x1: x[0], x2: x[1], x3: x[2], w1: w[0], w2: w[1], w3: w[2] }
        })
        .collect();
    Ok(CounterexampleTrace { deltas, delta_min: schedule.delta_min, rows })
}

/// Largest displacement between consecutive adaptive snapshots.
pub fn adaptive_displacements(run: &AdaptiveRun) -> Vec<f64> {
    run.snapshots.windows(2).map(|w| max_displacement(&w[0], &w[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_deltas_alternate_for_fifty_steps() {
        let trace = run_counterexample([0.1, 0.1, 0.1], 50).unwrap();
        assert_eq!(trace.rows.len(), 51);
        assert!(trace.alternates(), "first failure at {:?}", trace.first_non_alternation());
        assert!(trace.displacements().iter().all(|&d| d >= 2.0 * DEFAULT_DELTA_MIN));
        for r in &trace.rows {
            assert_eq!(r.w1, 1.0);
            assert!(r.x2 > 0.5 && r.x3 < -0.5);
            assert!(r.x2 - r.x1 < 1.0 && r.x1 - r.x3 < 1.0);
        }
    }

    #[test]
    fn outer_points_settle_while_x1_keeps_swinging() {
        let trace = run_counterexample([0.2, 0.05, 0.05], 50).unwrap();
        assert!(trace.alternates());
        let last = trace.rows.len() - 1;
        let x2_move = (trace.rows[last].x2 - trace.rows[last - 1].x2).abs();
        let x3_move = (trace.rows[last].x3 - trace.rows[last - 1].x3).abs();
        assert!(x2_move < 1e-2 && x3_move < 1e-2);
    }

    #[test]
    fn skewed_start_needs_bisection() {
        let trace = run_counterexample([0.01, 0.1, 0.2], 50).unwrap();
        assert!(trace.alternates());
        // doubling alone only yields powers of two
        assert!(trace.rows.iter().any(|r| r.w2.log2().fract() != 0.0 || r.w3.log2().fract() != 0.0));
    }

    #[test]
    fn tight_outer_gap_breaks_down() {
        let err = run_counterexample([0.01, 0.24, 0.01], 50).unwrap_err();
        assert!(matches!(err, Error::CounterexampleBreakdown { iteration: 1, .. }));
    }

    #[test]
    fn frozen_weights_converge() {
        let trace = run_counterexample([0.1, 0.1, 0.1], 10).unwrap();
        let config = RunConfig::blurring(KernelSpec::example_one()).with_max_iterations(1_000_000);
        for t in [0, 1, 5, 10] {
            let out = trace.frozen_run(t, &config).unwrap();
            assert!(out.converged, "t = {t}");
        }
    }

    #[test]
    fn deltas_out_of_range_are_rejected() {
        assert!(run_counterexample([0.0, 0.1, 0.1], 5).is_err());
        assert!(run_counterexample([0.1, 0.25, 0.1], 5).is_err());
    }

    #[test]
    fn bad_weights_stop_the_run() {
        struct Zero;
        impl WeightSchedule for Zero {
            fn weights(&mut self, _: usize, p: &PointSet, _: &KernelSpec) -> Result<Vec<f64>> {
                Ok(vec![0.0; p.len()])
            }
        }
        let p = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        let err = run_adaptive(&p, &KernelSpec::gaussian(1.0).unwrap(), &mut Zero, 3).unwrap_err();
        assert!(matches!(err, Error::CounterexampleBreakdown { iteration: 1, .. }));
    }
}
