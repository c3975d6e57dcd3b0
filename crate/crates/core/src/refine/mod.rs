//! Iris boundary refinement: radial edge tracing, polar outlier filtering and
//! a gradient-aware RANSAC ellipse fit around the coarse centre.

mod boundary;
mod ellipse;
mod ransac;

pub use boundary::{polar_median_filter, trace_boundary, BoundaryPoint, TraceConfig};
pub use ellipse::{fit_ellipse_direct, normalize_angle, Conic, EllipseParams};
pub use ransac::{
    fit_points, goodness_of_fit, ransac_ellipse, ransac_ellipse_observed, support, FitResult, GofMode, RansacConfig,
};

use alloc::vec::Vec;

use crate::coarse::{AnnulusParams, PeakCandidate};
use crate::imgcore::{scharr_gradients, GradientField};
use crate::{GrayImage, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RefineConfig {
    pub trace: TraceConfig,
    pub median_window: usize,
    /// Radius deviation from the running median above which a point is dropped.
    pub median_deviation: f64,
    pub ransac: RansacConfig,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { trace: TraceConfig::default(), median_window: 5, median_deviation: 2.0, ransac: RansacConfig::default() }
    }
}

/// Refines a coarse candidate on `roi`. Rejected or failed fits come back
/// unaccepted as a circle of radius `(r_min + r_max) / 2` on the coarse centre.
pub fn refine_ic(roi: &GrayImage, coarse: &PeakCandidate, p: &AnnulusParams, cfg: &RefineConfig) -> Result<FitResult> {
    let grad = scharr_gradients(roi)?;
    refine_with_gradients(&grad, coarse, p, cfg)
}

/// As [`refine_ic`] with precomputed gradients.
pub fn refine_with_gradients(
    grad: &GradientField,
    coarse: &PeakCandidate,
    p: &AnnulusParams,
    cfg: &RefineConfig,
) -> Result<FitResult> {
    let raw = trace_boundary(grad, coarse.position, p, &cfg.trace)?;
    let points = polar_median_filter(&raw, cfg.median_window, cfg.median_deviation)?;
    let mut rc = cfg.ransac;
    rc.axis_range = (0.7 * p.r_min, 1.4 * p.r_max);
    rc.expected_points = cfg.trace.n_rays;
    let fallback = || FitResult {
        ellipse: EllipseParams::circle(coarse.position, 0.5 * (p.r_min + p.r_max)),
        inliers: Vec::new(),
        gof: 0.0,
        accepted: false,
    };
    let Some(fit) = ransac_ellipse(&points, grad, &rc) else { return Ok(fallback()) };
    if !fit.accepted || fit.ellipse.centre.distance(coarse.position) > p.r_max {
        return Ok(FitResult { accepted: false, ..fallback() }.with_diagnostics(fit));
    }
    Ok(fit)
}

impl FitResult {
    // keep the rejected model's inliers and score for diagnostics
    fn with_diagnostics(mut self, rejected: FitResult) -> Self {
        self.inliers = rejected.inliers;
        self.gof = rejected.gof;
        self
    }
}
