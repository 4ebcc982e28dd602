//! Runs both processes on the same normal sample and prints how fast the
//! spread of the points collapses.
//!
//!     cargo run --release --example blurring_vs_nonblurring -- [n] [tau] [seed]

use blurshift::engine::{run, Mode, RunConfig, DEFAULT_MERGE_TOLERANCE};
use blurshift::experiments::sample_standard_normal;
use blurshift::kernel::KernelSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> blurshift::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(200, |a| a.parse().expect("n"));
    let tau: f64 = args.next().map_or(1.0, |a| a.parse().expect("tau"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));

    let data = sample_standard_normal(n, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let kernel = KernelSpec::gaussian(tau)?;
    for mode in [Mode::Blurring, Mode::Nonblurring] {
        let out = run(&data, &RunConfig::new(mode, kernel.clone()))?;
        let clusters = out.clusters(DEFAULT_MERGE_TOLERANCE)?;
        println!(
            "{mode}: {} iterations, converged={}, {} cluster(s), centers {:?}",
            out.iterations_used,
            out.converged,
            clusters.num_clusters(),
            clusters.centers.iter().map(|c| c[0]).collect::<Vec<_>>()
        );
        for rec in out.trace.records.iter().take(8) {
            println!("  iter {:>3}  std {:.3e}  radius {:.3e}", rec.iteration, rec.std[0], rec.radius);
        }
    }
    Ok(())
}
