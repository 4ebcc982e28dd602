//! Acceptance suite. Every criterion prints one PASS or FAIL line with its
//! runtime; the process exits nonzero if any criterion fails.
//!
//!     cargo test --release -p blurshift --test acceptance

mod common;

use std::time::{Duration, Instant};

use blurshift::diagnostics::{hull_trace, influence_decay, radius_trace, run_counterexample};
use blurshift::engine::{blurring_step, nonblurring_step, run, PointSet, RunConfig, TraceLevel, DEFAULT_MERGE_TOLERANCE};
use blurshift::experiments::{
    run_consistency, run_efficiency, run_robustness, sample_gaussian, sample_standard_normal, ExperimentConfig,
    DEFAULT_REPLICATIONS, DEFAULT_SEED,
};
use blurshift::gaussian_theory::{blurring_std_sequence, covariance_step, nonblurring_std_sequence, ShrinkState};
use blurshift::kernel::KernelSpec;
use blurshift::nalgebra::DMatrix;
use common::{naive_step, random_kernel, random_points, relative_error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Outcome,
}

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn err(e: blurshift::Error) -> String {
    e.to_string()
}

fn theory_sequences() -> Outcome {
    let blur = blurring_std_sequence(1.0, 2.0, 3).map_err(err)?;
    let nonblur = nonblurring_std_sequence(1.0, 2.0, 3).map_err(err)?;
    // a Gaussian sample of variance v is scaled by v / (v + tau^2) per
    // blurring step; the nonblurring factor keeps the initial variance
    let (tau2, v0) = (4.0f64, 1.0f64);
    let mut want_blur = vec![v0];
    let mut v = v0;
    for _ in 0..3 {
        v *= (v / (v + tau2)).powi(2);
        want_blur.push(v);
    }
    let want_blur: Vec<f64> = want_blur.iter().map(|v| v.sqrt()).collect();
    let factor = v0 / (v0 + tau2);
    let want_nonblur: Vec<f64> = (0..4).map(|t| v0.sqrt() * factor.powi(t)).collect();
    for (i, (b, w)) in blur.iter().zip(want_blur.iter().copied()).enumerate() {
        ensure(within(*b, w, 1e-6 * w), || format!("blurring step {i}: {b} vs {w}"))?;
    }
    for (i, (b, w)) in nonblur.iter().zip(want_nonblur.iter().copied()).enumerate() {
        ensure(within(*b, w, 1e-6 * w), || format!("nonblurring step {i}: {b} vs {w}"))?;
    }
    // the published, rounded values
    for (b, w) in blur[1..].iter().zip([0.2, 0.00198, 1.94e-9]) {
        ensure(within(*b, w, 5e-3 * w), || format!("blurring {b} does not round to {w}"))?;
    }
    for (b, w) in nonblur[1..].iter().zip([0.2, 0.04, 0.008]) {
        ensure(within(*b, w, 1e-6 * w), || format!("nonblurring {b} vs {w}"))?;
    }
    Ok(format!("blurring {:?}, nonblurring {:?}", &blur[1..], &nonblur[1..]))
}

fn covariance(p: &PointSet) -> DMatrix<f64> {
    let mean = p.mean();
    let d = p.dim();
    let mut c = DMatrix::zeros(d, d);
    for row in p.rows() {
        for a in 0..d {
            for b in 0..d {
                c[(a, b)] += (row[a] - mean[a]) * (row[b] - mean[b]);
            }
        }
    }
    c / p.len() as f64
}

fn one_step_shrinkage() -> Outcome {
    let n = 100_000;
    let data = sample_standard_normal(n, &mut ChaCha8Rng::seed_from_u64(DEFAULT_SEED)).map_err(err)?;
    let std = blurring_step(&data, &KernelSpec::gaussian(2.0).map_err(err)?).std_per_dim()[0];
    ensure((0.19..=0.21).contains(&std), || format!("1D std {std} outside [0.19, 0.21]"))?;

    // the anisotropic case needs fewer points for a 2% band
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED + 1);
    let sample = sample_gaussian(n / 2, &[0.0, 0.0], &sigma, &mut rng).map_err(err)?;
    let stepped = blurring_step(&sample, &KernelSpec::gaussian(1.0).map_err(err)?);
    let predicted = covariance_step(&ShrinkState::new(sigma, 1.0).map_err(err)?).map_err(err)?;
    let empirical = covariance(&stepped);
    let rel = (&empirical - predicted.covariance()).norm() / predicted.covariance().norm();
    ensure(rel < 0.02, || format!("2D covariance off by {:.3}% Frobenius", 100.0 * rel))?;
    Ok(format!("1D std {std:.5}; 2D covariance within {:.3}% Frobenius", 100.0 * rel))
}

fn efficiency_table() -> Outcome {
    let blur_want = [0.1210, 0.1043, 0.1008];
    let nonblur_want = [0.2126, 0.1239, 0.1025];
    let mut detail = Vec::new();
    for (i, tau) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let config = ExperimentConfig::efficiency(tau).with_replications(DEFAULT_REPLICATIONS);
        let r = run_efficiency(&config).map_err(err)?.row;
        let (m, b, nb) = (r.sample_mean.std, r.blurring.std, r.nonblurring.std);
        ensure(within(b, blur_want[i], 0.01), || format!("tau={tau}: std(blurring) {b:.4} vs {}", blur_want[i]))?;
        ensure(within(nb, nonblur_want[i], 0.01), || {
            format!("tau={tau}: std(nonblurring) {nb:.4} vs {}", nonblur_want[i])
        })?;
        ensure(m <= b && b <= nb, || format!("tau={tau}: ordering fails: {m:.4}, {b:.4}, {nb:.4}"))?;
        detail.push(format!(
            "tau={tau}: {m:.4} <= {b:.4} <= {nb:.4} (excluded {}/{})",
            r.excluded_blurring, r.excluded_nonblurring
        ));
    }
    Ok(detail.join("; "))
}

fn robustness_table() -> Outcome {
    let config = ExperimentConfig::robustness(0.5).with_replications(DEFAULT_REPLICATIONS);
    let low = run_robustness(&config).map_err(err)?.row;
    ensure(within(low.sample_mean.mean, 0.25, 0.01), || {
        format!("tau=0.5: mean(sample mean) {:.4} vs 0.25", low.sample_mean.mean)
    })?;
    ensure(low.blurring.mean.abs() < 0.02, || format!("tau=0.5: mean(blurring) {:.4}", low.blurring.mean))?;
    ensure(within(low.blurring.std, 0.1241, 0.01), || {
        format!("tau=0.5: std(blurring) {:.4} vs 0.1241", low.blurring.std)
    })?;

    let config = ExperimentConfig::robustness(2.0).with_replications(DEFAULT_REPLICATIONS);
    let high = run_robustness(&config).map_err(err)?.row;
    let bias = high.blurring.mean;
    ensure((0.05..=0.13).contains(&bias), || format!("tau=2: mean(blurring) {bias:.4} outside [0.05, 0.13]"))?;
    Ok(format!(
        "tau=0.5: sample mean {:.4}, blurring {:+.4} ({:.4}); tau=2: blurring {bias:+.4}",
        low.sample_mean.mean, low.blurring.mean, low.blurring.std
    ))
}

/// Random instances shared by the convergence and dichotomy criteria.
fn instances() -> Vec<(PointSet, KernelSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    (0..200)
        .map(|i| {
            let n = rng.random_range(1..=50);
            let p = rng.random_range(1..=3);
            let coords = (0..n * p).map(|_| rng.random_range(-3.0..3.0)).collect();
            let weights = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
            let points = PointSet::new(p, coords, weights).unwrap();
            // an untruncated kernel with a bandwidth far below the spread
            // leaves separated modes drifting together over thousands of
            // steps, so its bandwidth follows the instance diameter
            let kernel = match i % 4 {
                0 => KernelSpec::gaussian(rng.random_range(0.5..1.0) * points.diameter().max(0.1)).unwrap(),
                1 => {
                    let tau = rng.random_range(0.3..2.0);
                    KernelSpec::truncated_gaussian(tau, rng.random_range(1.0..3.0) * tau).unwrap()
                }
                2 => KernelSpec::truncated_flat(vec![
                    (0.0, 1.0),
                    (rng.random_range(0.3..1.0), rng.random_range(0.4..0.9)),
                    (rng.random_range(1.0..2.5), rng.random_range(0.05..0.4)),
                ])
                .unwrap(),
                _ => KernelSpec::tabulated(vec![(0.0, 1.0), (rng.random_range(0.2..1.0), 0.5), (2.0, 0.0)]).unwrap(),
            };
            (points, kernel)
        })
        .collect()
}

fn convergence_guarantee() -> Outcome {
    let mut worst_iterations = 0;
    let mut hulls = 0;
    for (i, (points, kernel)) in instances().into_iter().enumerate() {
        let config = RunConfig::blurring(kernel).with_trace(TraceLevel::Full);
        let out = run(&points, &config).map_err(err)?;
        let last = out.trace.records.last().and_then(|r| r.max_displacement).unwrap_or(0.0);
        ensure(out.converged && last < 1e-10 && out.iterations_used <= 500, || {
            format!("instance {i}: not converged after {} iterations (last move {last:e})", out.iterations_used)
        })?;
        let radius = radius_trace(&out.trace);
        ensure(radius.nonincreasing, || format!("instance {i}: radius grows at {:?}", radius.first_increase))?;
        if points.dim() <= 2 {
            let hull = hull_trace(&out.trace).map_err(err)?;
            ensure(hull.nested, || format!("instance {i}: hull not nested at {:?}", hull.first_violation))?;
            hulls += 1;
        }
        worst_iterations = worst_iterations.max(out.iterations_used);
    }
    Ok(format!("200 instances converged, at most {worst_iterations} iterations; {hulls} hull traces nested"))
}

fn blob(rng: &mut ChaCha8Rng, center: [f64; 2], n: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let (r, a) = (radius * rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
            vec![center[0] + r * a.cos(), center[1] + r * a.sin()]
        })
        .collect()
}

fn dichotomy() -> Outcome {
    // every instance again under a strictly positive kernel; the bandwidth
    // follows the spread so that influences stay representable
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED + 6);
    for (i, (points, _)) in instances().into_iter().enumerate() {
        let tau = rng.random_range(0.5..1.0) * points.diameter().max(0.1);
        let out = run(&points, &RunConfig::blurring(KernelSpec::gaussian(tau).map_err(err)?)).map_err(err)?;
        let k = out.clusters(DEFAULT_MERGE_TOLERANCE).map_err(err)?.num_clusters();
        ensure(out.converged && k == 1, || format!("instance {i}: gaussian run gave K={k}"))?;
    }

    let kernels = [KernelSpec::truncated_gaussian(1.0, 3.0).map_err(err)?, KernelSpec::example_one()];
    for (trial, kernel) in (0..10).flat_map(|t| kernels.iter().map(move |k| (t, k))) {
        let support = kernel.support_radius();
        let (na, nb) = (rng.random_range(5..40), rng.random_range(5..40));
        // blobs of radius 0.5 whose gap exceeds the support
        let gap = support + 1.0 + rng.random_range(0.01..2.0);
        let mut rows = blob(&mut rng, [0.0, 0.0], na, 0.5);
        let offset = rng.random_range(-1.0..1.0);
        rows.extend(blob(&mut rng, [gap, offset], nb, 0.5));
        let points = PointSet::from_rows(&rows).map_err(err)?;
        let out = run(&points, &RunConfig::blurring(kernel.clone()).with_trace(TraceLevel::Full)).map_err(err)?;
        let clusters = out.clusters(DEFAULT_MERGE_TOLERANCE).map_err(err)?;
        let mut sizes = clusters.sizes.clone();
        sizes.sort();
        let mut want = vec![na, nb];
        want.sort();
        ensure(out.converged && sizes == want, || format!("trial {trial}: sizes {sizes:?}, want {want:?}"))?;
        let first = clusters.labels[0];
        ensure(clusters.labels[..na].iter().all(|&l| l == first) && clusters.labels[na..].iter().all(|&l| l != first), || {
            format!("trial {trial}: clusters do not follow the blobs")
        })?;
        let influence = influence_decay(&out.trace, kernel, &clusters).map_err(err)?;
        ensure(influence.per_iteration_max.iter().all(|&f| f == 0.0) && influence.final_max == Some(0.0), || {
            format!("trial {trial}: cross-cluster influence {:?}", influence.final_max)
        })?;
    }
    Ok("gaussian K=1 on all 200 instances; 20 separated blob pairs give K=2 with zero cross influence".into())
}

fn counterexample() -> Outcome {
    let trace = run_counterexample([0.1, 0.1, 0.1], 50).map_err(err)?;
    ensure(trace.rows.len() == 51, || format!("{} rows", trace.rows.len()))?;
    ensure(trace.alternates(), || format!("alternation stops at {:?}", trace.first_non_alternation()))?;
    let smallest = trace.rows[1..].iter().map(|r| r.x1.abs()).fold(f64::INFINITY, f64::min);
    ensure(smallest >= 0.05, || format!("|x1| drops to {smallest}"))?;
    let slowest = trace.displacements().into_iter().fold(f64::INFINITY, f64::min);
    ensure(slowest >= 1e-10, || format!("a step moved only {slowest:e}"))?;

    let config = RunConfig::blurring(KernelSpec::example_one());
    for t in 0..trace.rows.len() {
        let frozen = trace.frozen_run(t, &config).map_err(err)?;
        ensure(frozen.converged, || format!("weights frozen at step {t} do not converge"))?;
    }
    Ok(format!("50 sign changes, min |x1| {smallest:.4}; all 51 frozen runs converge"))
}

fn oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED + 8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=10);
        let p = rng.random_range(1..=3);
        let data = random_points(&mut rng, n, p);
        let m = rng.random_range(1..=10);
        let centers = random_points(&mut rng, m, p);
        let kernel = random_kernel(&mut rng);

        let scale = data.max_abs_coordinate();
        let blur = blurring_step(&data, &kernel);
        worst = worst.max(relative_error(blur.coords(), &naive_step(&data, &data, &kernel), scale));

        // a center that sees no data leaves the step undefined
        if let Ok(nonblur) = nonblurring_step(&centers, &data, &kernel) {
            let scale = scale.max(centers.max_abs_coordinate());
            worst = worst.max(relative_error(nonblur.coords(), &naive_step(&centers, &data, &kernel), scale));
        }
    }
    ensure(worst <= 1e-12, || format!("worst relative error {worst:e}"))?;
    Ok(format!("worst relative error {worst:.2e}"))
}

fn consistency() -> Outcome {
    let report = run_consistency(&ExperimentConfig::consistency()).map_err(err)?;
    let rows = &report.rows;
    for r in rows {
        ensure(r.blurring.mean.abs() < 0.02, || format!("n={}: mean {:.4}", r.n_points, r.blurring.mean))?;
    }
    ensure(rows.windows(2).all(|w| w[1].blurring.std < w[0].blurring.std), || "std not strictly decreasing".into())?;
    Ok(rows
        .iter()
        .map(|r| format!("n={}: {:+.4} ({:.4}), excluded {}", r.n_points, r.blurring.mean, r.blurring.std, r.excluded))
        .collect::<Vec<_>>()
        .join("; "))
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: 1, name: "closed-form shrinkage sequences", budget: secs(1), check: theory_sequences },
        Criterion { id: 2, name: "one-step empirical shrinkage", budget: secs(30), check: one_step_shrinkage },
        Criterion { id: 3, name: "efficiency table", budget: None, check: efficiency_table },
        Criterion { id: 4, name: "robustness table", budget: None, check: robustness_table },
        Criterion { id: 5, name: "convergence on random instances", budget: secs(60), check: convergence_guarantee },
        Criterion { id: 6, name: "cluster dichotomy", budget: secs(10), check: dichotomy },
        Criterion { id: 7, name: "adaptive-weight counterexample", budget: secs(1), check: counterexample },
        Criterion { id: 8, name: "double-loop oracle", budget: secs(5), check: oracle },
        Criterion { id: 9, name: "consistency trend", budget: None, check: consistency },
    ];

    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let over = c.budget.filter(|b| elapsed > *b);
        let (verdict, detail) = match (&outcome, over) {
            (Ok(d), None) => ("PASS", d.clone()),
            (Ok(d), Some(b)) => ("FAIL", format!("over the {b:?} budget; {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        let budget = c.budget.map_or("minutes".to_string(), |b| format!("< {b:?}"));
        println!("{verdict} [{}] {} ({elapsed:.2?}, budget {budget}): {detail}", c.id, c.name);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
