//! Gradient-aware RANSAC ellipse fitting and the agreement goodness of fit.

use alloc::vec::Vec;

use rand::Rng;

use super::boundary::BoundaryPoint;
use super::ellipse::{fit_ellipse_direct, EllipseParams};
use crate::imgcore::GradientField;
use crate::{Point2, Result};

/// How the goodness of fit accumulates normal/gradient dot products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GofMode {
    /// Mean of `clamp(n . g_hat, 0, 1)`: fraction-like agreement in `[0, 1]`.
    #[default]
    Agreement,
    /// Sum of `min(n . grad, 0)` with the raw gradient; non-positive.
    LiteralMinZero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RansacConfig {
    pub iterations: usize,
    /// Inlier distance threshold, pixels.
    pub dist_thresh: f64,
    pub gof_threshold: f64,
    pub min_inlier_ratio: f64,
    /// Smallest accepted `b / a`.
    pub min_axis_ratio: f64,
    /// Accepted range for both semi-axes, pixels.
    pub axis_range: (f64, f64),
    pub gof_mode: GofMode,
    /// Derived from the run seed; not part of the configuration file.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub seed: u64,
    /// Denominator floor for the inlier ratio, e.g. the number of rays cast,
    /// so that rays without an edge count against acceptance.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub expected_points: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            dist_thresh: 1.0,
            gof_threshold: 0.5,
            min_inlier_ratio: 0.5,
            min_axis_ratio: 0.4,
            axis_range: (0.0, f64::INFINITY),
            gof_mode: GofMode::Agreement,
            seed: crate::seed::derive_seed(crate::seed::DEFAULT_SEED, "ransac"),
            expected_points: 0,
        }
    }
}

impl RansacConfig {
    fn shape_ok(&self, e: &EllipseParams) -> bool {
        let (lo, hi) = self.axis_range;
        e.is_valid() && e.b >= lo && e.a <= hi && e.b / e.a >= self.min_axis_ratio
    }
}

/// Outcome of the refinement stage.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub ellipse: EllipseParams,
    pub inliers: Vec<BoundaryPoint>,
    pub gof: f64,
    pub accepted: bool,
}

/// Support of `e`: points within `dist_thresh` whose gradient points along
/// the ellipse's outward normal. Returns the inlier indices and the summed
/// absolute residual.
pub fn support(e: &EllipseParams, points: &[BoundaryPoint], dist_thresh: f64) -> (Vec<usize>, f64) {
    let mut idx = Vec::new();
    let mut residual = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (d, n) = e.approx_distance(p.position);
        if d.abs() <= dist_thresh && p.gradient.dot(n) > 0.0 {
            idx.push(i);
            residual += d.abs();
        }
    }
    (idx, residual)
}

/// Seeded RANSAC over 5-point direct fits; `None` when fewer than five
/// points are given or every sample is degenerate.
pub fn ransac_ellipse(points: &[BoundaryPoint], grad: &GradientField, cfg: &RansacConfig) -> Option<FitResult> {
    ransac_ellipse_observed(points, grad, cfg, |_| {})
}

/// As [`ransac_ellipse`], reporting the support of every sampled model.
pub fn ransac_ellipse_observed(
    points: &[BoundaryPoint],
    grad: &GradientField,
    cfg: &RansacConfig,
    mut observe: impl FnMut(usize),
) -> Option<FitResult> {
    if points.len() < 5 {
        return None;
    }
    let mut rng = crate::seed::rng(cfg.seed);
    let n = points.len();
    let mut best: Option<(EllipseParams, Vec<usize>, f64)> = None;
    let mut sample = [0usize; 5];
    let mut chosen: Vec<Point2> = Vec::with_capacity(5);

    for _ in 0..cfg.iterations {
        draw_distinct(&mut rng, n, &mut sample);
        chosen.clear();
        chosen.extend(sample.iter().map(|&i| points[i].position));
        let Ok(model) = fit_ellipse_direct(&chosen) else { continue };
        if !cfg.shape_ok(&model) {
            continue;
        }
        let (inliers, residual) = support(&model, points, cfg.dist_thresh);
        observe(inliers.len());
        let better = match &best {
            None => true,
            Some((_, bi, br)) => inliers.len() > bi.len() || (inliers.len() == bi.len() && residual < *br),
        };
        if better {
            best = Some((model, inliers, residual));
        }
        if n == 5 {
            // every draw is the same set
            break;
        }
    }

    let (mut model, mut inliers, _) = best?;
    if inliers.len() >= 5 {
        let subset: Vec<Point2> = inliers.iter().map(|&i| points[i].position).collect();
        if let Ok(refit) = fit_ellipse_direct(&subset) {
            let (refit_inliers, _) = support(&refit, points, cfg.dist_thresh);
            // keep the best-so-far support monotone
            if refit_inliers.len() >= inliers.len() && cfg.shape_ok(&refit) {
                model = refit;
                inliers = refit_inliers;
            }
        }
    }
    let inlier_points: Vec<BoundaryPoint> = inliers.iter().map(|&i| points[i]).collect();
    let gof = goodness_of_fit(&model, grad, &inlier_points, cfg.gof_mode);
    let ratio = inlier_points.len() as f64 / n.max(cfg.expected_points) as f64;
    let accepted = inlier_points.len() >= 5
        && ratio >= cfg.min_inlier_ratio
        && cfg.shape_ok(&model)
        && (cfg.gof_mode == GofMode::LiteralMinZero || gof >= cfg.gof_threshold);
    Some(FitResult { ellipse: model, inliers: inlier_points, gof, accepted })
}

fn draw_distinct(rng: &mut impl Rng, n: usize, out: &mut [usize; 5]) {
    let mut k = 0;
    while k < 5 {
        let c = rng.random_range(0..n);
        if !out[..k].contains(&c) {
            out[k] = c;
            k += 1;
        }
    }
}

/// Agreement between the ellipse's outward normals and the image gradient
/// at the given points. Zero-magnitude gradients contribute nothing.
pub fn goodness_of_fit(e: &EllipseParams, grad: &GradientField, points: &[BoundaryPoint], mode: GofMode) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for p in points {
        let (_, n) = e.approx_distance(p.position);
        let Some(g) = grad.sample(p.position.x, p.position.y) else { continue };
        match mode {
            GofMode::Agreement => {
                if let Some(u) = g.normalized() {
                    acc += n.dot(u).clamp(0.0, 1.0);
                }
            }
            GofMode::LiteralMinZero => acc += n.dot(g).min(0.0),
        }
    }
    match mode {
        GofMode::Agreement => acc / points.len() as f64,
        GofMode::LiteralMinZero => acc,
    }
}

/// Convenience wrapper returning an error-free direct fit as a result.
pub fn fit_points(points: &[BoundaryPoint]) -> Result<EllipseParams> {
    let pts: Vec<Point2> = points.iter().map(|p| p.position).collect();
    fit_ellipse_direct(&pts)
}
