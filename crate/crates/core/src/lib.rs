//! Bayesian transfer learning for sparse high-dimensional linear regression
//! with a source-guided horseshoe prior.
//!
//! A target dataset is fitted under a horseshoe prior whose mean is a
//! Dirichlet-weighted average of rescaled coefficient estimates shared by
//! related source studies. Sources that disagree with the target get small
//! weights, and a dedicated zero component lets the prior fall back to the
//! ordinary zero-mean horseshoe.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`, which is what the file formats and the benchmark
//! harness use.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod draws;
pub mod error;
pub mod evalbench;
pub mod guide;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod simgen;

pub use config::TraderConfig;
pub use error::{Error, Result};
pub use scalar::Real;

pub type Dataset = data::Dataset<f64>;
pub type SourceEstimate = data::SourceEstimate<f64>;
pub type GuideSet = guide::GuideSet<f64>;
pub type PosteriorDraws = draws::PosteriorDraws<f64>;
pub type PosteriorSummary = draws::PosteriorSummary<f64>;
pub type SimInstance = simgen::SimInstance<f64>;
pub type ChainState = sampler::ChainState<f64>;
pub type FitResult = sampler::FitResult<f64>;

