//! Cross-scale cost aggregation for local stereo matching.
//!
//! The pipeline builds a Gaussian pyramid of the stereo pair, computes a
//! matching-cost volume per scale, aggregates each scale with one of five
//! similarity kernels, fuses the scales under an inter-scale Tikhonov
//! regularizer and picks disparities by winner-take-all.

pub mod aggregators;
pub mod config;
pub mod cost;
pub mod crossscale;
pub mod error;
pub mod eval;
pub mod image;
pub mod imageio;
pub mod pipeline;
pub mod pyramid;
pub mod volume;

pub use error::{Error, Result};
pub use image::{luminance, x_gradient, ColorImage, GrayImage, PixelCoord, ScalarField};
pub use volume::{CostVolume, DisparityMap};
pub use config::{PipelineParams, RunConfig, Settings};
pub use pipeline::{run_benchmark, run_lambda_sweep, run_pipeline};
