//! Testing hypotheses about a shifted distribution using a sample from the
//! observed one.
//!
//! The observed rows are resampled with weights given by the shift factor
//! `r` (distinct-index resampling, sampling without replacement, or
//! rejection sampling) and an ordinary test is then applied to the resample.
//! [`level_bounds`] turns the second moment of `r` into a finite-sample
//! guarantee for the resample size, and [`engine`] wires everything into
//! end-to-end pipelines.

// `!(x > 0.0)` checks deliberately reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod densities;
pub mod engine;
pub mod error;
pub mod expr;
pub mod level_bounds;
pub mod num;
pub mod ols;
pub mod resampling;
pub mod result;
pub mod rng;
pub mod target_tests;
pub mod weights;

pub use data::Dataset;
pub use error::{Error, Result};
pub use num::Real;
pub use result::{TestOutcome, TestResult};
pub use rng::RandomStream;
pub use weights::{estimate_second_moment, normalize_weights, WeightFunction};

/// Default scalar of the numeric core.
pub type Scalar = f64;
pub type LevelBoundF64 = level_bounds::LevelBound<f64>;
pub type LevelBoundF32 = level_bounds::LevelBound<f32>;
pub type GaussianConditionalF64 = densities::GaussianConditional<f64>;
pub type GaussianConditionalF32 = densities::GaussianConditional<f32>;
