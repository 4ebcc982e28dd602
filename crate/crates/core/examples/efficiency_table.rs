//! Spread of three location estimates on clean N(0, 1) samples of 100 points.
//!
//!     cargo run --release --example efficiency_table -- [replications] [seed]

use std::time::Instant;

use blurshift::experiments::{run_efficiency, ExperimentConfig, DEFAULT_REPLICATIONS, DEFAULT_SEED};

fn main() -> blurshift::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps = args.next().map_or(DEFAULT_REPLICATIONS, |a| a.parse().expect("replications"));
    let seed = args.next().map_or(DEFAULT_SEED, |a| a.parse().expect("seed"));

    println!("{:>5} {:>22} {:>22} {:>22} {:>9}", "tau", "sample mean", "blurring", "nonblurring", "excluded");
    for tau in [0.5, 1.0, 2.0] {
        let start = Instant::now();
        let report = run_efficiency(&ExperimentConfig::efficiency(tau).with_replications(reps).with_seed(seed))?;
        let r = &report.row;
        let cell = |s: &blurshift::experiments::SummaryStat| format!("{:+.4} ({:.4})", s.mean, s.std);
        println!(
            "{:>5} {:>22} {:>22} {:>22} {:>4}/{:<4} {:.1?}",
            tau,
            cell(&r.sample_mean),
            cell(&r.blurring),
            cell(&r.nonblurring),
            r.excluded_blurring,
            r.excluded_nonblurring,
            start.elapsed()
        );
    }
    Ok(())
}
