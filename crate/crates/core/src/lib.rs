//! Blurring and nonblurring mean-shift.
//!
//! The crate is organized around a handful of modules:
//!
//! * [`kernel`]: radial influence functions and a grid-based PDD check.
//! * [`engine`]: synchronous blurring and nonblurring updates, runs with a
//!   displacement stopping rule, and single-linkage cluster extraction.
//! * [`diagnostics`]: nested convex hulls, radius traces and cross-cluster
//!   influence on engine traces, plus the adaptive-weight counterexample.
//! * [`gaussian_theory`]: the closed-form shrinkage of Gaussian data under a
//!   Gaussian kernel.
//! * [`experiments`]: seeded Monte Carlo studies comparing both processes.
//! * [`io`] and [`cli`]: file formats and the command-line front end.
//!
//! ```
//! use blurshift::{engine, kernel::KernelSpec};
//!
//! let points = engine::PointSet::from_scalars(&[-1.0, -0.2, 0.1, 0.9]).unwrap();
//! let config = engine::RunConfig::blurring(KernelSpec::gaussian(1.0).unwrap());
//! let outcome = engine::run(&points, &config).unwrap();
//! let clusters = outcome.clusters(engine::DEFAULT_MERGE_TOLERANCE).unwrap();
//! assert!(outcome.converged);
//! assert_eq!(clusters.num_clusters(), 1);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod gaussian_theory;
pub mod io;
pub mod kernel;

pub use error::{Error, Result};
pub use nalgebra;
