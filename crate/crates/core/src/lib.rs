//! Change-point detection for noisy series whose underlying signal is continuous and
//! piecewise, but of unknown functional form.
//!
//! The pipeline denoises a series with singular spectrum analysis, re-noises each
//! partial reconstruction over a grid of noise levels, runs a piecewise-linear
//! Isolate-Detect detector on many realizations, and keeps only the groups of
//! realizations whose detections are consistent. See [`ssaid::ssaid_detect`].

pub mod baseline;
pub mod bench;
pub mod error;
pub mod id;
pub mod rng;
pub mod series;
pub mod simulate;
pub mod ssaid;
pub mod ssa;

pub use error::{Error, Result};
pub use id::{estimate_sigma, id_detect, slope_contrast, IdConfig};
pub use series::{mode, quartile3, rmse, zscore_normalize, DetectionResult, GroundTruth, TimeSeries};
pub use ssa::{decompose, Decomposition, SsaConfig};
pub use ssaid::{ssaid_detect, ssaid_detect_sliding, GroupStats, SsaidConfig, SsaidResult};
