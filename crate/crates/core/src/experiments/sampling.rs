use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::engine::PointSet;
use crate::error::{Error, Result};

/// `n` i.i.d. draws from `N(mean, cov)` with unit weights.
pub fn sample_gaussian<R: Rng + ?Sized>(n: usize, mean: &[f64], cov: &DMatrix<f64>, rng: &mut R) -> Result<PointSet> {
    let p = mean.len();
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if cov.nrows() != p || cov.ncols() != p {
        return Err(Error::DimensionMismatch { expected: p, found: cov.nrows() });
    }
    let chol = nalgebra::Cholesky::new(cov.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    let l = chol.l();
    let mut coords = Vec::with_capacity(n * p);
    let mut z = DVector::<f64>::zeros(p);
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let x = &l * &z;
        coords.extend(x.iter().zip(mean).map(|(xi, m)| xi + m));
    }
    PointSet::new(p, coords, vec![1.0; n])
}

/// Standard normal sample in one dimension.
pub fn sample_standard_normal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PointSet> {
    sample_gaussian(n, &[0.0], &DMatrix::identity(1, 1), rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub label: String,
    pub mean: f64,
    pub std: f64,
    pub proportion: f64,
}

/// One-dimensional Gaussian mixture sampled with fixed component counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub components: Vec<MixtureComponent>,
}

impl Mixture {
    /// 95% `N(0, 1)` inliers and 5% `N(5, 1)` outliers.
    pub fn contaminated() -> Self {
        Self {
            components: vec![
                MixtureComponent { label: "inlier".into(), mean: 0.0, std: 1.0, proportion: 0.95 },
                MixtureComponent { label: "outlier".into(), mean: 5.0, std: 1.0, proportion: 0.05 },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidArgument("mixture has no components".into()));
        }
        for c in &self.components {
            if !(c.std > 0.0 && c.std.is_finite() && c.mean.is_finite()) {
                return Err(Error::InvalidArgument(format!("component {:?} needs a finite mean and positive std", c.label)));
            }
            if !(c.proportion > 0.0 && c.proportion <= 1.0) {
                return Err(Error::InvalidArgument(format!("component {:?} has proportion {}", c.label, c.proportion)));
            }
        }
        let total: f64 = self.components.iter().map(|c| c.proportion).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("mixture proportions sum to {total}, not 1")));
        }
        Ok(())
    }

    /// Exact number of points drawn from each component for a sample of `n`.
    pub fn counts(&self, n: usize) -> Result<Vec<usize>> {
        self.validate()?;
        let counts = self
            .components
            .iter()
            .map(|c| {
                let exact = c.proportion * n as f64;
                let rounded = exact.round();
                if (exact - rounded).abs() > 1e-6 {
                    Err(Error::InvalidArgument(format!(
                        "proportion {} of {n} points is not a whole count",
                        c.proportion
                    )))
                } else {
                    Ok(rounded as usize)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let total: usize = counts.iter().sum();
        if total != n {
            return Err(Error::InvalidArgument(format!("component counts sum to {total}, not {n}")));
        }
        Ok(counts)
    }
}

/// Points of a mixture sample with the component index of each point.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSample {
    pub points: PointSet,
    pub component: Vec<usize>,
}

impl MixtureSample {
    pub fn count_labelled(&self, mixture: &Mixture, label: &str) -> usize {
        self.component.iter().filter(|&&c| mixture.components[c].label == label).count()
    }
}

/// Draws each component's exact share of `n` in component order.
pub fn sample_mixture<R: Rng + ?Sized>(mixture: &Mixture, n: usize, rng: &mut R) -> Result<MixtureSample> {
    let counts = mixture.counts(n)?;
    let mut coords = Vec::with_capacity(n);
    let mut component = Vec::with_capacity(n);
    for (idx, (c, &count)) in mixture.components.iter().zip(&counts).enumerate() {
        if count == 0 {
            continue;
        }
        let cov = DMatrix::from_element(1, 1, c.std * c.std);
        let part = sample_gaussian(count, &[c.mean], &cov, rng)?;
        coords.extend_from_slice(part.coords());
        component.extend(std::iter::repeat_n(idx, count));
    }
    Ok(MixtureSample { points: PointSet::new(1, coords, vec![1.0; n])?, component })
}
