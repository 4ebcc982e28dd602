//! log10 of the spread per iteration for both processes on one sample.
//!
//!     cargo run --release --example convergence_rate -- [seed]

use blurshift::experiments::{run_convergence_rate, ExperimentConfig, DEFAULT_SEED};

fn main() -> blurshift::Result<()> {
    let seed = std::env::args().nth(1).map_or(DEFAULT_SEED, |a| a.parse().expect("seed"));
    let report = run_convergence_rate(&ExperimentConfig::convergence_rate().with_seed(seed))?;
    for series in &report.series {
        println!("{} (converged={})", series.mode, series.converged);
        for p in series.points.iter().take(12) {
            let log = p.log10_std.map_or("-inf".to_string(), |v| format!("{v:+.2}"));
            println!("  {:>3}  mean {:+.5}  log10 std {log}", p.iteration, p.mean);
        }
    }
    Ok(())
}
