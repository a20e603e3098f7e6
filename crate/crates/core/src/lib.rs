//! Explainable clustering via threshold trees.
//!
//! A clustering is *explainable* when its clusters are the leaf regions of a
//! binary tree of axis-aligned threshold cuts. This crate converts reference
//! clusterings into explainable ones and measures the cost of doing so:
//!
//! - [`random_thresholds`]: the Random Thresholds algorithm for k-medians,
//!   with Monte Carlo estimation of the expected cost ratio.
//! - [`cut_process`]: cut-metric embeddings of l1 point sets and exact
//!   evaluation of the surviving-point process the algorithm induces.
//! - [`kmeans`]: the solo/bulk-cut tree construction for k-means, driven by
//!   squared-gap cut distributions.
//! - [`instances`]: lower-bound instance generators (axis instances,
//!   hitting-set reductions, random set systems) and an exact hitting-set
//!   solver.
//! - [`oracle`]: brute-force optimal explainable clusterings on small
//!   instances.
//! - [`verify`]: runnable property suites tying the exact and randomized
//!   routes together.
//!
//! Trials run data-parallel by default; disable the `parallel` feature for a
//! sequential build.
//!
//! ```
//! use xclust_core::model::PointSet;
//! use xclust_core::random_thresholds::estimate_alpha;
//! use xclust_core::seed::Seed;
//!
//! let centers = PointSet::new(vec![vec![1.0, 0.0], vec![0.0, 10.0]]).unwrap();
//! let (mean, stderr) = estimate_alpha(&centers, 20_000, Seed(7)).unwrap();
//! // Exact expected cost is 2*10/(1+10).
//! assert!((mean - 20.0 / 11.0).abs() < 4.0 * stderr.max(1e-3));
//! ```

pub mod cut_process;
pub mod error;
pub mod exec;
pub mod instances;
pub mod kmeans;
pub mod model;
pub mod oracle;
pub mod random_thresholds;
pub mod seed;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use seed::Seed;
