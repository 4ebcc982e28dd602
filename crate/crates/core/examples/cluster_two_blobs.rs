//! Two well separated blobs under a truncated kernel end up as two clusters
//! that no longer see each other.
//!
//!     cargo run --release --example cluster_two_blobs

use blurshift::diagnostics::influence_decay;
use blurshift::engine::{run, RunConfig, TraceLevel, DEFAULT_MERGE_TOLERANCE};
use blurshift::experiments::sample_gaussian;
use blurshift::kernel::KernelSpec;
use blurshift::nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> blurshift::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cov = DMatrix::identity(2, 2) * 0.1;
    let left = sample_gaussian(60, &[-4.0, 0.0], &cov, &mut rng)?;
    let right = sample_gaussian(40, &[4.0, 1.0], &cov, &mut rng)?;
    let rows: Vec<Vec<f64>> = left.rows().chain(right.rows()).map(<[f64]>::to_vec).collect();
    let points = blurshift::engine::PointSet::from_rows(&rows)?;

    let kernel = KernelSpec::truncated_gaussian(1.0, 3.0)?;
    let out = run(&points, &RunConfig::blurring(kernel.clone()).with_trace(TraceLevel::Full))?;
    let clusters = out.clusters(DEFAULT_MERGE_TOLERANCE)?;
    println!("converged={} after {} iterations", out.converged, out.iterations_used);
    for (c, size) in clusters.centers.iter().zip(&clusters.sizes) {
        println!("  center ({:+.4}, {:+.4})  size {size}", c[0], c[1]);
    }
    let influence = influence_decay(&out.trace, &kernel, &clusters)?;
    println!("cross-cluster influence at the end: {:?}", influence.final_max);
    Ok(())
}
