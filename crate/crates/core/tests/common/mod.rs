//! Independent double-loop evaluation of both updates, shared by the oracle
//! tests and the acceptance suite.
#![allow(dead_code)]

use blurshift::engine::PointSet;
use blurshift::kernel::{KernelFamily, KernelSpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Kernel profile written out from the family definitions.
pub fn influence(kernel: &KernelSpec, d: f64) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    match kernel.family() {
        KernelFamily::Gaussian { tau, cutoff } => match cutoff {
            Some(c) if d > *c => 0.0,
            _ => (-(d * d) / (2.0 * tau * tau)).exp(),
        },
        KernelFamily::TruncatedFlat { levels } => {
            let mut lower = f64::NEG_INFINITY;
            for &(t, v) in levels {
                if d > lower && d <= t {
                    return v;
                }
                lower = t;
            }
            0.0
        }
        KernelFamily::Tabulated { knots } => {
            for w in knots.windows(2) {
                let ((x0, v0), (x1, v1)) = (w[0], w[1]);
                if d > x0 && d <= x1 {
                    return v0 + (v1 - v0) * (d - x0) / (x1 - x0);
                }
            }
            0.0
        }
    }
}

pub fn naive_step(queries: &PointSet, source: &PointSet, kernel: &KernelSpec) -> Vec<f64> {
    let p = source.dim();
    let mut out = Vec::new();
    for i in 0..queries.len() {
        let y = queries.point(i);
        let mut num = vec![0.0; p];
        let mut den = 0.0;
        for j in 0..source.len() {
            let x = source.point(j);
            let d = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let fw = influence(kernel, d) * source.weights()[j];
            den += fw;
            for k in 0..p {
                num[k] += fw * x[k];
            }
        }
        out.extend(num.iter().map(|v| v / den));
    }
    out
}

/// Largest error relative to the larger of the value and the data scale.
pub fn relative_error(got: &[f64], want: &[f64], scale: f64) -> f64 {
    got.iter().zip(want).map(|(g, w)| (g - w).abs() / w.abs().max(scale)).fold(0.0, f64::max)
}

pub fn random_kernel(rng: &mut ChaCha8Rng) -> KernelSpec {
    match rng.random_range(0..4) {
        0 => KernelSpec::gaussian(rng.random_range(0.3..3.0)).unwrap(),
        1 => {
            let tau = rng.random_range(0.3..2.0);
            KernelSpec::truncated_gaussian(tau, rng.random_range(1.0..3.0) * tau).unwrap()
        }
        2 => KernelSpec::truncated_flat(vec![
            (0.0, 1.0),
            (rng.random_range(0.5..1.5), rng.random_range(0.3..0.9)),
            (rng.random_range(1.6..3.0), rng.random_range(0.0..0.3)),
        ])
        .unwrap(),
        _ => KernelSpec::tabulated(vec![(0.0, 1.0), (rng.random_range(0.3..1.0), 0.6), (2.5, 0.0)]).unwrap(),
    }
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, p: usize) -> PointSet {
    let coords = (0..n * p).map(|_| rng.random_range(-3.0..3.0)).collect();
    let weights = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
    PointSet::new(p, coords, weights).unwrap()
}
