//! Giant-component fluctuations of dynamic rank-one random graphs.
//!
//! The crate computes the deterministic supercritical curves of a weight law,
//! the covariance of the Gaussian limit of the giant's size and volume,
//! simulates the graph both directly and through the simultaneous
//! breadth-first walk, samples the limit process, and runs Monte Carlo
//! comparisons between all of them.

#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod graph_oracle;
pub mod harness;
pub mod limit_sampler;
pub mod linalg;
pub mod numeric;
pub mod output;
pub mod rng;
pub mod stats;
pub mod theory;
pub mod walk;
pub mod weights;
