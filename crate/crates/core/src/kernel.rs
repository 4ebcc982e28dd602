//! Radial influence functions.
//!
//! A kernel maps the Euclidean distance between two points to an influence
//! in `[0, 1]`. Every kernel evaluates to exactly `1` at distance zero (the
//! self term), which keeps the blurring denominator strictly positive.
//!
//! Three families are provided:
//!
//! * `gaussian`: `exp(-d^2 / (2 tau^2))`, optionally cut to zero beyond a radius.
//! * `truncated_flat`: a step profile given by `(threshold, value)` pairs. The
//!   value of a pair applies on `(previous threshold, threshold]`; beyond the
//!   last threshold the influence is zero.
//! * `tabulated`: a piecewise-linear profile through `(distance, value)` knots,
//!   starting at `(0, 1)` and zero beyond the last knot.
//!
//! Kernels are plain immutable values and can be shared freely across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The family and parameters of a radial kernel, in the serialized form used
/// by configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelFamily {
    Gaussian {
        tau: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
    },
    TruncatedFlat {
        levels: Vec<(f64, f64)>,
    },
    Tabulated {
        knots: Vec<(f64, f64)>,
    },
}

/// A validated radial kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelFamily", into = "KernelFamily")]
pub struct KernelSpec {
    family: KernelFamily,
}

impl TryFrom<KernelFamily> for KernelSpec {
    type Error = Error;

    fn try_from(family: KernelFamily) -> Result<Self> {
        validate(&family)?;
        Ok(Self { family })
    }
}

impl From<KernelSpec> for KernelFamily {
    fn from(k: KernelSpec) -> Self {
        k.family
    }
}

fn validate(family: &KernelFamily) -> Result<()> {
    match family {
        KernelFamily::Gaussian { tau, cutoff } => {
            if !(tau.is_finite() && *tau > 0.0) {
                return Err(Error::InvalidKernel(format!("gaussian tau must be positive, got {tau}")));
            }
            if let Some(c) = cutoff {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::InvalidKernel(format!("gaussian cutoff must be positive, got {c}")));
                }
            }
        }
        KernelFamily::TruncatedFlat { levels } => {
            if levels.is_empty() {
                return Err(Error::InvalidKernel("truncated_flat needs at least one level".into()));
            }
            check_pairs(levels, "level")?;
            let (t0, v0) = levels[0];
            if t0 == 0.0 && v0 != 1.0 {
                return Err(Error::InvalidKernel(format!(
                    "a level at distance 0 must have value 1, got {v0}"
                )));
            }
        }
        KernelFamily::Tabulated { knots } => {
            if knots.len() < 2 {
                return Err(Error::InvalidKernel("tabulated profile needs at least two knots".into()));
            }
            check_pairs(knots, "knot")?;
            if knots[0] != (0.0, 1.0) {
                return Err(Error::InvalidKernel("tabulated profile must start at (0, 1)".into()));
            }
        }
    }
    Ok(())
}

fn check_pairs(pairs: &[(f64, f64)], what: &str) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for &(d, v) in pairs {
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::InvalidKernel(format!("{what} distance {d} is not a finite nonnegative number")));
        }
        if d <= prev {
            return Err(Error::InvalidKernel(format!("{what} distances must be strictly increasing")));
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidKernel(format!("{what} value {v} outside [0, 1]")));
        }
        prev = d;
    }
    Ok(())
}

impl KernelSpec {
    /// Gaussian profile `exp(-d^2 / (2 tau^2))`.
    pub fn gaussian(tau: f64) -> Result<Self> {
        KernelFamily::Gaussian { tau, cutoff: None }.try_into()
    }

    /// Gaussian profile set to zero for distances beyond `cutoff`.
    pub fn truncated_gaussian(tau: f64, cutoff: f64) -> Result<Self> {
        KernelFamily::Gaussian { tau, cutoff: Some(cutoff) }.try_into()
    }

    /// Step profile from `(threshold, value)` pairs.
    pub fn truncated_flat(levels: Vec<(f64, f64)>) -> Result<Self> {
        KernelFamily::TruncatedFlat { levels }.try_into()
    }

    /// Piecewise-linear profile through `(distance, value)` knots.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        KernelFamily::Tabulated { knots }.try_into()
    }

    /// The three-level kernel used in the adaptive-weight counterexample:
    /// 1 at zero, 1/2 up to distance 1, 0 beyond.
    pub fn example_one() -> Self {
        Self::truncated_flat(vec![(0.0, 1.0), (1.0, 0.5)]).expect("static kernel is valid")
    }

    /// Parses the JSON configuration form, e.g. `{"family": "gaussian", "tau": 2.0}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let family: KernelFamily = serde_json::from_str(text)
            .map_err(|e| Error::InvalidKernel(e.to_string()))?;
        family.try_into()
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    /// Gaussian bandwidth, if this is a Gaussian kernel.
    pub fn tau(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Gaussian { tau, .. } => Some(tau),
            _ => None,
        }
    }

    /// Influence at `distance`.
    pub fn evaluate(&self, distance: f64) -> Result<f64> {
        if !(distance >= 0.0) {
            return Err(Error::InvalidArgument(format!("distance must be nonnegative, got {distance}")));
        }
        Ok(self.profile(distance))
    }

    /// Infallible evaluation for a distance known to be nonnegative.
    pub(crate) fn profile(&self, d: f64) -> f64 {
        if d == 0.0 {
            return 1.0;
        }
        match &self.family {
            KernelFamily::Gaussian { tau, cutoff } => {
                if cutoff.is_some_and(|c| d > c) {
                    0.0
                } else {
                    (-d * d / (2.0 * tau * tau)).exp()
                }
            }
            KernelFamily::TruncatedFlat { levels } => levels
                .iter()
                .find(|&&(t, _)| d <= t)
                .map_or(0.0, |&(_, v)| v),
            KernelFamily::Tabulated { knots } => {
                let k = knots.partition_point(|&(x, _)| x < d);
                if k == knots.len() {
                    return 0.0;
                }
                let (x1, v1) = knots[k];
                let (x0, v0) = knots[k - 1];
                v0 + (v1 - v0) * (d - x0) / (x1 - x0)
            }
        }
    }

    /// Smallest radius beyond which the kernel vanishes identically.
    /// Infinite for an untruncated Gaussian.
    pub fn support_radius(&self) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { cutoff, .. } => cutoff.unwrap_or(f64::INFINITY),
            KernelFamily::TruncatedFlat { levels } => levels
                .iter()
                .rev()
                .find(|&&(_, v)| v > 0.0)
                .map_or(0.0, |&(t, _)| t),
            KernelFamily::Tabulated { knots } => {
                let last_positive = knots.iter().rposition(|&(_, v)| v > 0.0).unwrap_or(0);
                // linear interpolation reaches zero at the following knot
                knots.get(last_positive + 1).unwrap_or(&knots[last_positive]).0
            }
        }
    }

    /// A distance grid that covers the interesting part of the profile:
    /// twice the support radius, or ten bandwidths for an untruncated Gaussian.
    pub fn default_grid(&self) -> Vec<f64> {
        let reach = match (&self.family, self.support_radius()) {
            (KernelFamily::Gaussian { tau, .. }, r) if r.is_infinite() => 10.0 * tau,
            (_, r) if r > 0.0 => 2.0 * r,
            _ => 1.0,
        };
        let mut grid = linspace(0.0, reach, 401);
        if let KernelFamily::TruncatedFlat { levels } = &self.family {
            grid.extend(levels.iter().map(|l| l.0));
        }
        if let KernelFamily::Tabulated { knots } = &self.family {
            grid.extend(knots.iter().map(|k| k.0));
        }
        grid
    }

    /// Fills `out[j]` with the influence at squared distance `dist_sq[j]`.
    ///
    /// This is the hot path of every mean-shift step. Gaussian kernels use a
    /// vectorizable exponential that agrees with `f64::exp` to a few ulp and
    /// returns exactly 1 at zero. Always inlined so that it picks up the
    /// target features of the caller.
    #[inline(always)]
    pub(crate) fn fill_from_squared(&self, dist_sq: &[f64], out: &mut [f64]) {
        debug_assert_eq!(dist_sq.len(), out.len());
        self.squared_fill().fill(dist_sq, out);
    }

    /// Evaluator for [`KernelSpec::fill_from_squared`] with the per-kernel
    /// constants worked out once, for use in hot loops.
    pub(crate) fn squared_fill(&self) -> SquaredFill<'_> {
        match &self.family {
            KernelFamily::Gaussian { tau, cutoff } => SquaredFill::Gaussian {
                scale: -1.0 / (2.0 * tau * tau),
                cutoff_sq: cutoff.map_or(f64::INFINITY, |c| c * c),
            },
            _ => SquaredFill::Profile(self),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum SquaredFill<'a> {
    Gaussian { scale: f64, cutoff_sq: f64 },
    Profile(&'a KernelSpec),
}

impl SquaredFill<'_> {
    #[inline(always)]
    pub(crate) fn fill(&self, dist_sq: &[f64], out: &mut [f64]) {
        match *self {
            SquaredFill::Gaussian { scale, cutoff_sq } => simd::gaussian_fill(dist_sq, out, scale, cutoff_sq),
            SquaredFill::Profile(kernel) => {
                for (o, &d2) in out.iter_mut().zip(dist_sq) {
                    *o = kernel.profile(d2.sqrt());
                }
            }
        }
    }
}

/// Which clause of the PDD condition a check refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PddClause {
    /// `0 <= f <= 1`, with `f = 1` exactly at distance 0 and only there.
    UnitOnlyAtZero,
    /// `f` depends on the distance alone.
    Radial,
    /// `f` is nonincreasing in the distance.
    Decreasing,
}

/// Outcome of one clause of a PDD check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClauseCheck {
    pub clause: PddClause,
    pub passed: bool,
    /// Smallest grid distance at which the clause fails.
    pub first_violation: Option<f64>,
}

/// Grid-based PDD verdict. Passing is necessary, not sufficient: only the
/// sampled distances are examined.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PddReport {
    /// Clause (i) at the origin alone: `f(0) = 1`.
    pub unit_at_zero: bool,
    pub clauses: Vec<ClauseCheck>,
}

impl PddReport {
    pub fn passed(&self) -> bool {
        self.unit_at_zero && self.clauses.iter().all(|c| c.passed)
    }

    pub fn clause(&self, clause: PddClause) -> &ClauseCheck {
        self.clauses.iter().find(|c| c.clause == clause).expect("all clauses are reported")
    }
}

/// Checks the PDD clauses on a grid of distances. The grid must contain 0
/// and at least two positive distances.
pub fn verify_pdd(kernel: &KernelSpec, grid: &[f64]) -> Result<PddReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("distance grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|d| !(**d >= 0.0) || d.is_infinite()) {
        return Err(Error::InvalidArgument(format!("grid distance {bad} is not finite and nonnegative")));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted[0] != 0.0 {
        return Err(Error::InvalidArgument("distance grid must contain 0".into()));
    }
    if sorted.len() < 3 {
        return Err(Error::InvalidArgument("distance grid needs at least two positive distances".into()));
    }

    let values: Vec<f64> = sorted.iter().map(|&d| kernel.profile(d)).collect();
    let unit_at_zero = values[0] == 1.0;

    let range_violation = sorted
        .iter()
        .zip(&values)
        .find(|&(&d, &v)| {
            let in_range = (0.0..=1.0).contains(&v);
            !in_range || (d > 0.0 && v >= 1.0) || (d == 0.0 && v != 1.0)
        })
        .map(|(&d, _)| d);

    let monotone_violation = sorted
        .windows(2)
        .zip(values.windows(2))
        .find(|(_, v)| v[1] > v[0])
        .map(|(d, _)| d[1]);

    let check = |clause, violation: Option<f64>| ClauseCheck {
        clause,
        passed: violation.is_none(),
        first_violation: violation,
    };

    Ok(PddReport {
        unit_at_zero,
        clauses: vec![
            check(PddClause::UnitOnlyAtZero, range_violation),
            // every family is a function of the distance alone
            check(PddClause::Radial, None),
            check(PddClause::Decreasing, monotone_violation),
        ],
    })
}

/// `n` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

mod simd {
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    const INV_LN2: f64 = std::f64::consts::LOG2_E;
    // 1.5 * 2^52: adding it rounds to the nearest integer and leaves that
    // integer in the low mantissa bits
    const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0;
    const ROUND_MAGIC_BITS: u64 = 0x4338_0000_0000_0000;
    const UNDERFLOW: f64 = -708.0;

    const G: [f64; 10] = [
        0.5000000000000001,
        0.16666666666666669,
        0.041666666666624164,
        0.008333333333330065,
        0.0013888888917196719,
        0.00019841269863040545,
        2.4801521322368692e-05,
        2.7557268480310024e-06,
        2.7620075879983367e-07,
        2.5100375832561234e-08,
    ];

    /// `exp(x)` for `x <= 0`; flushes to zero below `UNDERFLOW`.
    #[inline(always)]
    fn exp_nonpositive(x: f64) -> f64 {
        let xc = if x < UNDERFLOW { UNDERFLOW } else { x };
        let t = xc * INV_LN2 + ROUND_MAGIC;
        let k = t - ROUND_MAGIC;
        let r = (xc - k * LN2_HI) - k * LN2_LO;
        // exp(r) = 1 + r + r^2 g(r) with g a degree-9 Chebyshev fit on
        // |r| <= ln2/2, evaluated by Estrin's scheme
        let r2 = r * r;
        let r4 = r2 * r2;
        let r8 = r4 * r4;
        let q0 = G[0] + r * G[1];
        let q1 = G[2] + r * G[3];
        let q2 = G[4] + r * G[5];
        let q3 = G[6] + r * G[7];
        let q4 = G[8] + r * G[9];
        let s0 = q0 + r2 * q1;
        let s1 = q2 + r2 * q3;
        let g = (s0 + r4 * s1) + r8 * q4;
        let p = (1.0 + r) + r2 * g;
        let exponent = t.to_bits().wrapping_sub(ROUND_MAGIC_BITS).wrapping_add(1023) << 52;
        let y = p * f64::from_bits(exponent);
        if x < UNDERFLOW {
            0.0
        } else {
            y
        }
    }

    #[inline(always)]
    pub(super) fn gaussian_fill(dist_sq: &[f64], out: &mut [f64], scale: f64, cutoff_sq: f64) {
        for (o, &d2) in out.iter_mut().zip(dist_sq) {
            let v = exp_nonpositive(d2 * scale);
            *o = if d2 > cutoff_sq { 0.0 } else { v };
        }
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn matches_libm_closely() {
            let mut worst: f64 = 0.0;
            for i in 0..200_000 {
                let x = -(i as f64) * 0.0035;
                let want = x.exp();
                let got = exp_nonpositive(x);
                if want > 1e-300 {
                    worst = worst.max(((got - want) / want).abs());
                }
            }
            assert!(worst < 5e-16, "worst relative error {worst}");
            assert_eq!(exp_nonpositive(0.0), 1.0);
            assert_eq!(exp_nonpositive(-0.0), 1.0);
            assert_eq!(exp_nonpositive(-1e6), 0.0);
            assert_eq!(exp_nonpositive(f64::NEG_INFINITY), 0.0);
        }
    }
}
