//! Three points whose weights change every step: the middle one keeps
//! jumping across zero, while any fixed choice of weights converges.
//!
//!     cargo run --release --example counterexample -- [iterations]

use blurshift::diagnostics::run_counterexample;
use blurshift::engine::RunConfig;
use blurshift::kernel::KernelSpec;

fn main() -> blurshift::Result<()> {
    let iterations = std::env::args().nth(1).map_or(30, |a| a.parse().expect("iterations"));
    let trace = run_counterexample([0.1, 0.1, 0.1], iterations)?;
    println!("{:>3} {:>10} {:>10} {:>10} {:>9} {:>9} {:>9}", "t", "x1", "x2", "x3", "w1", "w2", "w3");
    for r in &trace.rows {
        println!("{:>3} {:>+10.5} {:>+10.5} {:>+10.5} {:>9.3e} {:>9.3e} {:>9.3e}", r.t, r.x1, r.x2, r.x3, r.w1, r.w2, r.w3);
    }
    println!("alternates: {}", trace.alternates());

    let config = RunConfig::blurring(KernelSpec::example_one());
    for t in [1, iterations / 2, iterations] {
        let frozen = trace.frozen_run(t, &config)?;
        println!("weights of step {t} held fixed: converged={} in {} iterations", frozen.converged, frozen.iterations_used);
    }
    Ok(())
}
