//! Location estimates on normal samples with ten percent of the points
//! planted far to the right.
//!
//!     cargo run --release --example robustness_table -- [replications] [seed]

use blurshift::experiments::{run_robustness, ExperimentConfig, SummaryStat, DEFAULT_REPLICATIONS, DEFAULT_SEED};

fn main() -> blurshift::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps = args.next().map_or(DEFAULT_REPLICATIONS, |a| a.parse().expect("replications"));
    let seed = args.next().map_or(DEFAULT_SEED, |a| a.parse().expect("seed"));

    let cell = |s: &SummaryStat| format!("{:+.4} ({:.4})", s.mean, s.std);
    println!("{:>5} {:>18} {:>18} {:>18}", "tau", "sample mean", "blurring", "nonblurring");
    for tau in [0.5, 1.0, 2.0] {
        let report = run_robustness(&ExperimentConfig::robustness(tau).with_replications(reps).with_seed(seed))?;
        let r = &report.row;
        println!("{:>5} {:>18} {:>18} {:>18}", tau, cell(&r.sample_mean), cell(&r.blurring), cell(&r.nonblurring));
    }
    Ok(())
}
