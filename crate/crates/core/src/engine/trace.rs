use serde::{Deserialize, Serialize};

use super::points::PointSet;

/// How much per-iteration information a run keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    None,
    #[default]
    Summary,
    Full,
}

/// Snapshot summary after one iteration. Record 0 describes the input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Largest Euclidean move of any point in this iteration; `None` for the
    /// initial record.
    pub max_displacement: Option<f64>,
    /// Largest pairwise distance between points.
    pub radius: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub positions: Option<PointSet>,
}

impl IterationRecord {
    pub(crate) fn capture(iteration: usize, points: &PointSet, max_displacement: Option<f64>, full: bool) -> Self {
        Self {
            iteration,
            max_displacement,
            radius: points.diameter(),
            mean: points.mean(),
            std: points.std_per_dim(),
            positions: full.then(|| points.clone()),
        }
    }
}

/// Per-iteration records of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.radius).collect()
    }

    /// Dimension of the traced points, if any record exists.
    pub fn dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.std.len())
    }

    /// Positions of every record, when the trace was kept at full level.
    pub fn positions(&self) -> Option<Vec<&PointSet>> {
        self.records.iter().map(|r| r.positions.as_ref()).collect()
    }
}
