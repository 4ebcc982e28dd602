//! Closed-form shrinkage of Gaussian data under a Gaussian kernel.
//!
//! If the points are distributed as `N(0, Sigma)` and the kernel is
//! `exp(-|x - y|^2 / (2 tau^2))`, one blurring update maps every point through
//! the linear map `(I + tau^2 Sigma^{-1})^{-1}`. The updated population is again
//! Gaussian, with covariance
//!
//! ```text
//! Sigma' = (I + tau^2 Sigma^{-1})^{-1} Sigma (I + tau^2 Sigma^{-1})^{-1}
//! ```
//!
//! which shares the eigenvectors of `Sigma` and maps every eigenvalue
//! `lambda -> lambda^3 / (lambda + tau^2)^2`. The nonblurring process always
//! averages against the original data, so its spread contracts by the fixed
//! factor `sigma0^2 / (sigma0^2 + tau^2)` per iteration.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Covariance of the blurred population after `step` updates.
#[derive(Clone, Debug)]
pub struct ShrinkState {
    covariance: DMatrix<f64>,
    tau: f64,
    step: usize,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl ShrinkState {
    pub fn new(covariance: DMatrix<f64>, tau: f64) -> Result<Self> {
        Self::at_step(covariance, tau, 0)
    }

    fn at_step(covariance: DMatrix<f64>, tau: f64, step: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        if !covariance.is_square() || covariance.nrows() == 0 {
            return Err(Error::NotPositiveDefinite("matrix must be square and nonempty".into()));
        }
        if covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("matrix has non-finite entries".into()));
        }
        let scale = covariance.amax().max(f64::MIN_POSITIVE);
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotPositiveDefinite(format!("asymmetry {asym:e} exceeds tolerance")));
        }
        let eigen = SymmetricEigen::new(covariance.clone());
        if let Some(min) = eigen.eigenvalues.iter().copied().reduce(f64::min) {
            if !(min > 0.0) {
                return Err(Error::NotPositiveDefinite(format!("smallest eigenvalue {min:e}")));
            }
        }
        Ok(Self { covariance, tau, step, eigen })
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigen.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigen.eigenvectors
    }

    /// `(I + tau^2 Sigma^{-1})^{-1}`, built from the eigendecomposition as
    /// `V diag(lambda / (lambda + tau^2)) V^T`.
    pub fn shrink_matrix(&self) -> DMatrix<f64> {
        let t2 = self.tau * self.tau;
        let factors = self.eigen.eigenvalues.map(|l| l / (l + t2));
        let v = &self.eigen.eigenvectors;
        v * DMatrix::from_diagonal(&factors) * v.transpose()
    }
}

/// Applies the population blurring map `(I + tau^2 Sigma^{-1})^{-1} x`.
pub fn shrink_map(x: &DVector<f64>, state: &ShrinkState) -> Result<DVector<f64>> {
    if x.len() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), found: x.len() });
    }
    Ok(state.shrink_matrix() * x)
}

/// Covariance after one more blurring update.
pub fn covariance_step(state: &ShrinkState) -> Result<ShrinkState> {
    let m = state.shrink_matrix();
    let next = &m * &state.covariance * &m;
    let symmetric = (&next + next.transpose()) * 0.5;
    ShrinkState::at_step(symmetric, state.tau, state.step + 1)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// One eigenvalue of the blurred covariance, `lambda_0 .. lambda_steps`.
pub fn eigenvalue_sequence(lambda0: f64, tau: f64, steps: usize) -> Result<Vec<f64>> {
    check_positive("lambda0", lambda0)?;
    check_positive("tau", tau)?;
    let t2 = tau * tau;
    let mut seq = Vec::with_capacity(steps + 1);
    let mut l = lambda0;
    seq.push(l);
    for _ in 0..steps {
        let ratio = l / (l + t2);
        l *= ratio * ratio;
        seq.push(l);
    }
    Ok(seq)
}

/// Standard deviations of the blurred population, `sqrt` of [`eigenvalue_sequence`].
pub fn blurring_std_sequence(sigma0: f64, tau: f64, steps: usize) -> Result<Vec<f64>> {
    check_positive("sigma0", sigma0)?;
    Ok(eigenvalue_sequence(sigma0 * sigma0, tau, steps)?.into_iter().map(f64::sqrt).collect())
}

/// `sigma0 * (sigma0^2 / (sigma0^2 + tau^2))^s` for `s = 0..=steps`.
pub fn nonblurring_std_sequence(sigma0: f64, tau: f64, steps: usize) -> Result<Vec<f64>> {
    check_positive("sigma0", sigma0)?;
    check_positive("tau", tau)?;
    let v0 = sigma0 * sigma0;
    let ratio = v0 / (v0 + tau * tau);
    let mut seq = Vec::with_capacity(steps + 1);
    let mut s = sigma0;
    seq.push(s);
    for _ in 0..steps {
        s *= ratio;
        seq.push(s);
    }
    Ok(seq)
}

/// One row of the side-by-side spread comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StdRow {
    pub step: usize,
    pub blurring_std: f64,
    pub nonblurring_std: f64,
}

/// Both spread sequences side by side.
pub fn std_table(sigma0: f64, tau: f64, steps: usize) -> Result<Vec<StdRow>> {
    let blur = blurring_std_sequence(sigma0, tau, steps)?;
    let nonblur = nonblurring_std_sequence(sigma0, tau, steps)?;
    Ok(blur
        .into_iter()
        .zip(nonblur)
        .enumerate()
        .map(|(step, (blurring_std, nonblurring_std))| StdRow { step, blurring_std, nonblurring_std })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn scalar_shrink() {
        let s = ShrinkState::new(DMatrix::from_element(1, 1, 1.0), 2.0).unwrap();
        let y = shrink_map(&DVector::from_element(1, 5.0), &s).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-14);
        let zero = shrink_map(&DVector::zeros(1), &s).unwrap();
        assert_eq!(zero[0], 0.0);
    }

    #[test]
    fn anisotropic_shrink() {
        // per-axis factors lambda / (lambda + tau^2) = 1/2 and 4/5
        let s = ShrinkState::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])), 1.0).unwrap();
        let y = shrink_map(&DVector::from_vec(vec![1.0, 1.0]), &s).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-14);
        assert!((y[1] - 0.8).abs() < 1e-14);
        assert!(shrink_map(&DVector::zeros(3), &s).is_err());
    }

    #[test]
    fn covariance_recursion_values() {
        let mut s = ShrinkState::new(DMatrix::from_element(1, 1, 1.0), 2.0).unwrap();
        s = covariance_step(&s).unwrap();
        assert!(rel(s.covariance()[(0, 0)], 0.04) < 1e-12);
        s = covariance_step(&s).unwrap();
        // 0.04^3 / 4.04^2
        assert!(rel(s.covariance()[(0, 0)], 0.04f64.powi(3) / 4.04f64.powi(2)) < 1e-12);
        assert!(rel(s.covariance()[(0, 0)].sqrt(), 0.001_980_198) < 1e-6);
        s = covariance_step(&s).unwrap();
        assert!(rel(s.covariance()[(0, 0)].sqrt(), 1.941_3e-9) < 1e-4);
        assert_eq!(s.step(), 3);
    }

    #[test]
    fn eigenvalue_sequence_values() {
        let seq = eigenvalue_sequence(1.0, 2.0, 3).unwrap();
        assert_eq!(seq[0], 1.0);
        assert!(rel(seq[1], 0.04) < 1e-14);
        assert!(rel(seq[2], 3.921_184e-6) < 1e-6);
        assert!(rel(seq[3], 3.768_173_553e-18) < 1e-4);
        // tiny bandwidth: first ratio (l/(l+t2))^2 ~ 1 - 2 t2 / l
        let tiny = eigenvalue_sequence(1.0, 1e-6, 1).unwrap();
        assert!((tiny[1] - (1.0 - 2e-12)).abs() < 1e-15);
        assert!(eigenvalue_sequence(0.0, 1.0, 2).is_err());
        assert!(eigenvalue_sequence(1.0, -1.0, 2).is_err());
    }

    #[test]
    fn nonblurring_values() {
        let seq = nonblurring_std_sequence(1.0, 2.0, 3).unwrap();
        for (got, want) in seq.iter().zip([1.0, 0.2, 0.04, 0.008]) {
            assert!(rel(*got, want) < 1e-14);
        }
        let half = nonblurring_std_sequence(3.0, 3.0, 2).unwrap();
        assert!(rel(half[2], 0.75) < 1e-15);
        assert_eq!(nonblurring_std_sequence(1.5, 1.0, 0).unwrap(), vec![1.5]);
    }

    #[test]
    fn rejects_non_spd() {
        let not_sym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(ShrinkState::new(not_sym, 1.0).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(ShrinkState::new(indefinite, 1.0), Err(Error::NotPositiveDefinite(_))));
        assert!(ShrinkState::new(DMatrix::identity(2, 2), 0.0).is_err());
    }

    fn spd(p: usize, seed: &[f64]) -> DMatrix<f64> {
        let a = DMatrix::from_fn(p, p, |i, j| seed[(i * p + j) % seed.len()]);
        &a * a.transpose() + DMatrix::identity(p, p) * 0.1
    }

    proptest! {
        #[test]
        fn eigenvectors_are_preserved(seed in prop::collection::vec(-2.0f64..2.0, 9), tau in 0.2f64..3.0) {
            let s0 = ShrinkState::new(spd(3, &seed), tau).unwrap();
            let s1 = covariance_step(&s0).unwrap();
            let v = s0.eigenvectors();
            let rotated = v.transpose() * s1.covariance() * v;
            let mut off: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    if i != j { off = off.max(rotated[(i, j)].abs()); }
                }
            }
            prop_assert!(off < 1e-10, "off-diagonal {off}");
            // each eigenvalue follows lambda^3 / (lambda + tau^2)^2
            for i in 0..3 {
                let l = s0.eigenvalues()[i];
                let want = l.powi(3) / (l + tau * tau).powi(2);
                prop_assert!((rotated[(i, i)] - want).abs() <= 1e-10 * want.max(1.0));
            }
        }

        #[test]
        fn shrink_map_is_odd_and_linear(seed in prop::collection::vec(-2.0f64..2.0, 4), x in prop::collection::vec(-5.0f64..5.0, 2), a in -3.0f64..3.0, tau in 0.1f64..4.0) {
            let s = ShrinkState::new(spd(2, &seed), tau).unwrap();
            let x = DVector::from_vec(x);
            let fx = shrink_map(&x, &s).unwrap();
            let fneg = shrink_map(&(-&x), &s).unwrap();
            prop_assert!((&fx + &fneg).amax() < 1e-12);
            let fax = shrink_map(&(&x * a), &s).unwrap();
            prop_assert!((fax - fx * a).amax() < 1e-11);
        }

        #[test]
        fn blurring_dominates_nonblurring(sigma0 in 0.05f64..5.0, tau in 0.05f64..5.0) {
            let b = blurring_std_sequence(sigma0, tau, 6).unwrap();
            let nb = nonblurring_std_sequence(sigma0, tau, 6).unwrap();
            prop_assert_eq!(b[0], nb[0]);
            prop_assert!(rel(b[1], nb[1]) < 1e-12);
            for s in 2..=6 {
                prop_assert!(b[s] < nb[s]);
            }
        }

        #[test]
        fn eigenvalues_decrease_under_geometric_bound(l0 in 0.01f64..10.0, tau in 0.05f64..5.0) {
            let seq = eigenvalue_sequence(l0, tau, 12).unwrap();
            let q = (l0 / (l0 + tau * tau)).powi(2);
            for (s, w) in seq.windows(2).enumerate() {
                if w[0] > 0.0 {
                    prop_assert!(w[1] < w[0]);
                }
                prop_assert!(w[1] <= q.powi(s as i32 + 1) * l0 * (1.0 + 1e-12));
            }
        }
    }
}
