//! Iris-centre localization for low-resolution visible-light eye images.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every numeric stage of
//! the pipeline:
//!
//! - [`imgcore`]: rasters, Scharr gradients, spatial/FFT convolution, resampling.
//! - [`coarse`]: annulus-kernel correlation and peak-to-sidelobe peak selection.
//! - [`refine`]: radial boundary tracing, polar median filtering and
//!   gradient-aware RANSAC ellipse fitting.
//! - [`track`]: constant-velocity Kalman filter and NCC corner templates.
//! - [`closure`]: HOG descriptor and linear SVM for open/closed eye states.
//! - [`gaze`]: eye-corner detection, EC-IC regression models, point of gaze.
//! - [`metrics`]: normalized WEC/AEC/BEC errors and accuracy curves.
//! - [`synth`]: deterministic synthetic eye and face renderer.
//! - [`pipeline`]: eye ROI layout and the per-eye locate step.
//!
//! File formats, dataset loaders and the command line live in the `eyeloc`
//! crate.
#![no_std]

extern crate alloc;

pub mod closure;
pub mod coarse;
mod error;
pub mod gaze;
pub mod geometry;
pub mod imgcore;
pub mod metrics;
pub mod pipeline;
pub mod refine;
pub mod seed;
pub mod synth;
pub mod track;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use geometry::{Point2, Rect, Side};
pub use imgcore::{GradientField, GrayImage, Kernel2D, Surface};
