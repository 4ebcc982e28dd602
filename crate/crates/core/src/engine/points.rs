use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N` weighted points in `p` dimensions, stored row-major.
///
/// Weights are bound to point indices and never change during a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointSetRepr", into = "PointSetRepr")]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PointSetRepr {
    positions: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<PointSetRepr> for PointSet {
    type Error = Error;
    fn try_from(r: PointSetRepr) -> Result<Self> {
        PointSet::from_rows_weighted(&r.positions, r.weights)
    }
}

impl From<PointSet> for PointSetRepr {
    fn from(p: PointSet) -> Self {
        PointSetRepr { positions: p.rows().map(<[f64]>::to_vec).collect(), weights: p.weights }
    }
}

impl PointSet {
    /// Builds a point set from row-major coordinates and per-point weights.
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if coords.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not form rows of dimension {dim}",
                coords.len()
            )));
        }
        let n = coords.len() / dim;
        if weights.len() != n {
            return Err(Error::InvalidArgument(format!("{} weights for {n} points", weights.len())));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite coordinate in point {}", i / dim)));
        }
        check_weights(&weights)?;
        Ok(Self { dim, coords, weights })
    }

    /// Unit-weight point set from rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows_weighted(rows, vec![1.0; rows.len()])
    }

    pub fn from_rows_weighted(rows: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        let dim = rows.first().ok_or(Error::EmptyInput)?.len();
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            coords.extend_from_slice(row);
        }
        Self::new(dim, coords, weights)
    }

    /// Unit-weight one-dimensional point set.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec(), vec![1.0; values.len()])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same positions with a new weight vector.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::InvalidArgument(format!("{} weights for {} points", weights.len(), self.len())));
        }
        check_weights(&weights)?;
        Ok(Self { dim: self.dim, coords: self.coords.clone(), weights })
    }

    /// Same weights with new row-major coordinates.
    pub(crate) fn with_coords(&self, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len(), self.coords.len());
        Self { dim: self.dim, coords, weights: self.weights.clone() }
    }

    /// First coordinate of every point; convenient for one-dimensional data.
    pub fn first_coordinates(&self) -> Vec<f64> {
        self.rows().map(|r| r[0]).collect()
    }

    /// Unweighted per-dimension arithmetic mean.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for row in self.rows() {
            for (acc, x) in m.iter_mut().zip(row) {
                *acc += x;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Unweighted per-dimension standard deviation with the `n - 1`
    /// denominator; zero for a single point.
    pub fn std_per_dim(&self) -> Vec<f64> {
        let n = self.len();
        if n < 2 {
            return vec![0.0; self.dim];
        }
        let mean = self.mean();
        let mut ss = vec![0.0; self.dim];
        for row in self.rows() {
            for ((acc, x), m) in ss.iter_mut().zip(row).zip(&mean) {
                *acc += (x - m) * (x - m);
            }
        }
        ss.into_iter().map(|s| (s / (n - 1) as f64).sqrt()).collect()
    }

    /// Largest distance between any two points.
    pub fn diameter(&self) -> f64 {
        if self.dim == 1 {
            let (lo, hi) = self
                .coords
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            return hi - lo;
        }
        let mut best: f64 = 0.0;
        for i in 0..self.len() {
            let a = self.point(i);
            for j in i + 1..self.len() {
                best = best.max(squared_distance(a, self.point(j)));
            }
        }
        best.sqrt()
    }

    /// Largest absolute coordinate, used to scale rounding tolerances.
    pub fn max_abs_coordinate(&self) -> f64 {
        self.coords.iter().fold(0.0, |m: f64, c| m.max(c.abs()))
    }

    /// Shifts every point by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: offset.len() });
        }
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|row| row.iter().zip(offset).map(|(x, o)| x + o))
            .collect();
        Ok(self.with_coords(coords))
    }

    /// Reorders points (and their weights) so that output `k` is input `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let coords = order.iter().flat_map(|&i| self.point(i).iter().copied()).collect();
        let weights = order.iter().map(|&i| self.weights[i]).collect();
        Self { dim: self.dim, coords, weights }
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    match weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        Some(i) => Err(Error::InvalidArgument(format!("weight of point {i} must be finite and positive"))),
        None => Ok(()),
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
