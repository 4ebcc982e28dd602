//! Kernel profiles and the grid check for positive definite decreasing
//! influence functions.
//!
//!     cargo run --release --example kernels

use blurshift::kernel::{verify_pdd, KernelSpec, PddClause};

fn main() -> blurshift::Result<()> {
    let kernels = [
        ("gaussian tau=1", KernelSpec::gaussian(1.0)?),
        ("gaussian tau=1, cut at 3", KernelSpec::truncated_gaussian(1.0, 3.0)?),
        ("step 1 / 0.5 / 0", KernelSpec::example_one()),
        ("tabulated", KernelSpec::tabulated(vec![(0.0, 1.0), (0.5, 0.7), (2.0, 0.0)])?),
        // not decreasing, so the check should flag it
        ("bump", KernelSpec::tabulated(vec![(0.0, 1.0), (0.5, 0.3), (1.0, 0.6), (2.0, 0.0)])?),
    ];

    println!("{:<26} {:>7} {:>7} {:>7} {:>7}   pdd", "kernel", "f(0)", "f(0.5)", "f(1)", "f(2.5)");
    for (name, k) in &kernels {
        let f = |d| k.evaluate(d).unwrap();
        let report = verify_pdd(k, &k.default_grid())?;
        let verdict = if report.passed() {
            "ok".to_string()
        } else {
            let c = report.clause(PddClause::Decreasing);
            format!("fails, first at d={:?}", c.first_violation)
        };
        println!("{name:<26} {:>7.4} {:>7.4} {:>7.4} {:>7.4}   {verdict}", f(0.0), f(0.5), f(1.0), f(2.5));
    }
    Ok(())
}
