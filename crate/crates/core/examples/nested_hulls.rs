//! Convex hulls of successive blurring iterations in the plane, each inside
//! the previous one.
//!
//!     cargo run --release --example nested_hulls

use blurshift::diagnostics::{hull_trace, radius_trace, Hull};
use blurshift::engine::{run, PointSet, RunConfig, TraceLevel};
use blurshift::kernel::KernelSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> blurshift::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let coords: Vec<f64> = (0..2 * 30).map(|_| rng.random_range(-2.0..2.0)).collect();
    let points = PointSet::new(2, coords, vec![1.0; 30])?;

    let config = RunConfig::blurring(KernelSpec::gaussian(0.8)?).with_trace(TraceLevel::Full);
    let out = run(&points, &config)?;
    let hulls = hull_trace(&out.trace)?;
    let radii = radius_trace(&out.trace);
    for (rec, hull) in out.trace.records.iter().zip(&hulls.hulls).take(10) {
        let vertices = match hull {
            Hull::Polygon { vertices } => vertices.len(),
            Hull::Interval { .. } => 2,
        };
        println!("iter {:>3}  hull vertices {:>2}  radius {:.4e}", rec.iteration, vertices, rec.radius);
    }
    println!("nested: {}  radius nonincreasing: {}", hulls.nested, radii.nonincreasing);
    Ok(())
}
