//! Closed-form shrinkage of Gaussian data next to a simulated blurring run.
//!
//!     cargo run --release --example shrinkage_theory

use blurshift::engine::{blurring_step, PointSet};
use blurshift::experiments::sample_gaussian;
use blurshift::gaussian_theory::{covariance_step, std_table, ShrinkState};
use blurshift::kernel::KernelSpec;
use blurshift::nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn empirical_covariance(p: &PointSet) -> DMatrix<f64> {
    let (n, d) = (p.len(), p.dim());
    let mean = p.mean();
    let mut c = DMatrix::zeros(d, d);
    for row in p.rows() {
        for a in 0..d {
            for b in 0..d {
                c[(a, b)] += (row[a] - mean[a]) * (row[b] - mean[b]);
            }
        }
    }
    c / n as f64
}

fn main() -> blurshift::Result<()> {
    println!("step  blurring std  nonblurring std   (sigma0=1, tau=2)");
    for row in std_table(1.0, 2.0, 4)? {
        println!("{:>4}  {:>12.6e}  {:>15.6e}", row.step, row.blurring_std, row.nonblurring_std);
    }

    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
    let predicted = covariance_step(&ShrinkState::new(cov.clone(), 1.0)?)?;
    let sample = sample_gaussian(20_000, &[0.0, 0.0], &cov, &mut ChaCha8Rng::seed_from_u64(5))?;
    let stepped = blurring_step(&sample, &KernelSpec::gaussian(1.0)?);
    println!("predicted covariance after one step:{}", predicted.covariance());
    println!("empirical covariance after one step:{}", empirical_covariance(&stepped));
    Ok(())
}
