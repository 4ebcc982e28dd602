use serde::Serialize;

use crate::engine::{IterationTrace, PointSet};
use crate::error::{Error, Result};

/// Convex hull of one snapshot.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hull {
    Interval { min: f64, max: f64 },
    /// Counterclockwise vertices with collinear points removed. One vertex
    /// for coincident points, two for collinear ones.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Hull {
    pub fn of(points: &PointSet) -> Result<Self> {
        match points.dim() {
            1 => {
                let (min, max) = points
                    .coords()
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
                Ok(Hull::Interval { min, max })
            }
            2 => {
                let pts: Vec<[f64; 2]> = points.rows().map(|r| [r[0], r[1]]).collect();
                Ok(Hull::Polygon { vertices: monotone_chain(&pts) })
            }
            p => Err(Error::UnsupportedDimension(p)),
        }
    }

    /// Whether `other` lies inside `self`, allowing an outward slack of `tol`.
    pub fn contains(&self, other: &Hull, tol: f64) -> bool {
        match (self, other) {
            (Hull::Interval { min, max }, Hull::Interval { min: lo, max: hi }) => {
                *lo >= min - tol && *hi <= max + tol
            }
            (Hull::Polygon { vertices }, Hull::Polygon { vertices: inner }) => {
                inner.iter().all(|p| polygon_contains(vertices, *p, tol))
            }
            _ => false,
        }
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Sign-exact version of [`cross`]. Near-coincident points make the plain
/// formula inconsistent between calls, which corrupts the hull.
fn orientation(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let c = |p: [f64; 2]| robust::Coord { x: p[0], y: p[1] };
    robust::orient2d(c(o), c(a), c(b))
}

/// Andrew's monotone chain. Returns the hull counterclockwise starting from
/// the lexicographically smallest point; collinear points are dropped.
pub fn monotone_chain(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }

    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && orientation(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && orientation(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn point_segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len_sq = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len_sq > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len_sq).clamp(0.0, 1.0) } else { 0.0 };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    d[0].hypot(d[1])
}

/// Point-in-convex-polygon with an outward slack of `tol` (a distance).
pub fn polygon_contains(vertices: &[[f64; 2]], p: [f64; 2], tol: f64) -> bool {
    match vertices.len() {
        0 => false,
        1 => point_segment_distance(vertices[0], vertices[0], p) <= tol,
        2 => point_segment_distance(vertices[0], vertices[1], p) <= tol,
        n => (0..n).all(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let edge = (b[0] - a[0]).hypot(b[1] - a[1]);
            // signed distance of p to the left of edge a -> b
            cross(a, b, p) >= -tol * edge
        }),
    }
}

/// Convex hulls of every snapshot in a full trace with a nesting verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HullTrace {
    pub hulls: Vec<Hull>,
    pub nested: bool,
    /// First iteration whose hull escapes its predecessor.
    pub first_violation: Option<usize>,
    pub tolerance: f64,
}

/// Builds per-iteration hulls for one- or two-dimensional traces and checks
/// that each hull lies inside the previous one.
pub fn hull_trace(trace: &IterationTrace) -> Result<HullTrace> {
    let snapshots = trace
        .positions()
        .ok_or_else(|| Error::InvalidArgument("hull traces need a full-level trace with positions".into()))?;
    let dim = trace.dim().unwrap_or(1);
    if dim > 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let tolerance = super::rounding_tolerance(&snapshots);
    let hulls = snapshots.iter().map(|p| Hull::of(p)).collect::<Result<Vec<_>>>()?;
    let first_violation = hulls
        .windows(2)
        .position(|w| !w[0].contains(&w[1], tolerance))
        .map(|i| i + 1);
    Ok(HullTrace { hulls, nested: first_violation.is_none(), first_violation, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_with_interior_and_collinear_points() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.0, 0.5]];
        let hull = monotone_chain(&pts);
        assert_eq!(hull, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
    }

    #[test]
    fn nearly_coincident_points_give_a_clean_triangle() {
        let a = [0.18394500376637254, 3.3983673747355008];
        let b = [0.1839450037664115, 3.3983673747354506];
        let c = [4.913508859938089, -2.6776952756101755];
        let hull = monotone_chain(&[c, b, a]);
        assert_eq!(hull.len(), 3);
        assert!(polygon_contains(&hull, [0.5 * (a[0] + c[0]), 0.5 * (a[1] + c[1])], 1e-12));
    }

    #[test]
    fn degenerate_hulls() {
        assert_eq!(monotone_chain(&[[1.0, 2.0], [1.0, 2.0]]), vec![[1.0, 2.0]]);
        let line = monotone_chain(&[[0.0, 0.0], [2.0, 2.0], [1.0, 1.0]]);
        assert_eq!(line, vec![[0.0, 0.0], [2.0, 2.0]]);
        assert!(polygon_contains(&line, [0.5, 0.5], 1e-12));
        assert!(!polygon_contains(&line, [0.5, 0.6], 1e-12));
        assert!(polygon_contains(&[[1.0, 1.0]], [1.0, 1.0], 0.0));
    }

    #[test]
    fn containment() {
        let outer = Hull::Polygon { vertices: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]] };
        let inner = Hull::Polygon { vertices: vec![[0.5, 0.5], [1.5, 0.5], [1.0, 1.5]] };
        let poking = Hull::Polygon { vertices: vec![[0.5, 0.5], [2.1, 0.5], [1.0, 1.5]] };
        assert!(outer.contains(&inner, 1e-12));
        assert!(!outer.contains(&poking, 1e-12));
        assert!(!inner.contains(&outer, 1e-12));
        let a = Hull::Interval { min: -1.0, max: 1.0 };
        assert!(a.contains(&Hull::Interval { min: -0.5, max: 1.0 }, 0.0));
        assert!(!a.contains(&Hull::Interval { min: -1.5, max: 0.0 }, 0.0));
    }

    #[test]
    fn three_dimensions_are_rejected() {
        let p = PointSet::from_rows(&[vec![0.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(Hull::of(&p), Err(Error::UnsupportedDimension(3))));
    }
}
