use serde::{Deserialize, Serialize};

use super::points::{squared_distance, PointSet};
use crate::error::{Error, Result};

/// Converged positions grouped into clusters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// Cluster label of every point; labels are numbered in order of each
    /// cluster's first member.
    pub labels: Vec<usize>,
    /// Weighted mean of each cluster's members.
    pub centers: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub converged: bool,
    pub iterations_used: usize,
}

impl ClusterResult {
    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    /// Indices of the points in cluster `label`.
    pub fn members(&self, label: usize) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, &l)| l == label).map(|(i, _)| i).collect()
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage grouping: the transitive closure of `|x_i - x_j| <= merge_tolerance`.
///
/// The returned result is marked converged with zero iterations; callers that
/// ran the engine overwrite both fields (see `RunOutcome::clusters`).
pub fn extract_clusters(points: &PointSet, merge_tolerance: f64) -> Result<ClusterResult> {
    if !(merge_tolerance > 0.0 && merge_tolerance.is_finite()) {
        return Err(Error::InvalidArgument(format!("merge tolerance must be positive, got {merge_tolerance}")));
    }
    let n = points.len();
    let tol_sq = merge_tolerance * merge_tolerance;

    // sweep in order of the first coordinate; only pairs within the
    // tolerance along that axis can be linked
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points.point(a)[0].total_cmp(&points.point(b)[0]));
    let mut sets = DisjointSet::new(n);
    for (pos, &i) in order.iter().enumerate() {
        let xi = points.point(i);
        for &j in &order[pos + 1..] {
            let xj = points.point(j);
            if xj[0] - xi[0] > merge_tolerance {
                break;
            }
            if squared_distance(xi, xj) <= tol_sq {
                sets.union(i, j);
            }
        }
    }

    let mut label_of_root = vec![usize::MAX; n];
    let mut labels = Vec::with_capacity(n);
    let mut sizes: Vec<usize> = Vec::new();
    let mut sums: Vec<Vec<f64>> = Vec::new();
    let mut mass: Vec<f64> = Vec::new();
    for i in 0..n {
        let root = sets.find(i);
        if label_of_root[root] == usize::MAX {
            label_of_root[root] = sizes.len();
            sizes.push(0);
            sums.push(vec![0.0; points.dim()]);
            mass.push(0.0);
        }
        let label = label_of_root[root];
        labels.push(label);
        sizes[label] += 1;
        let w = points.weights()[i];
        mass[label] += w;
        for (s, x) in sums[label].iter_mut().zip(points.point(i)) {
            *s += w * x;
        }
    }
    let centers = sums
        .into_iter()
        .zip(&mass)
        .map(|(s, m)| s.into_iter().map(|v| v / m).collect())
        .collect();

    Ok(ClusterResult { labels, centers, sizes, converged: true, iterations_used: 0 })
}

/// Center of the largest cluster; ties go to the lowest label.
pub fn majority_mode(result: &ClusterResult) -> Result<&[f64]> {
    let mut best: Option<usize> = None;
    for (label, &size) in result.sizes.iter().enumerate() {
        if best.is_none_or(|b| size > result.sizes[b]) {
            best = Some(label);
        }
    }
    best.map(|b| result.centers[b].as_slice())
        .ok_or_else(|| Error::InvalidArgument("cluster result has no clusters".into()))
}
