//! Radial boundary tracing and polar outlier filtering.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::coarse::AnnulusParams;
use crate::geometry::parabolic_offset;
use crate::imgcore::GradientField;
use crate::{Error, Point2, Result};

/// Candidate iris boundary point found along one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryPoint {
    /// Ray angle in radians, image axes (`y` down).
    pub angle: f64,
    /// Sub-pixel distance from the ray origin.
    pub radius: f64,
    pub position: Point2,
    /// Unit image gradient at the edge.
    pub gradient: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TraceConfig {
    pub n_rays: usize,
    /// Sample spacing along each ray, pixels.
    pub step: f64,
    /// Minimum gradient magnitude (unnormalized Scharr units).
    pub edge_threshold: f64,
    /// Maximum angle between gradient and ray direction, degrees.
    pub max_deviation_deg: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self { n_rays: 64, step: 0.5, edge_threshold: 160.0, max_deviation_deg: 60.0 }
    }
}

/// Casts `n_rays` uniformly spaced rays from `centre` and keeps, per ray,
/// the strongest outward edge in `[0.5 r_min, 1.5 r_max]` whose gradient
/// agrees with the ray direction.
pub fn trace_boundary(
    grad: &GradientField,
    centre: Point2,
    p: &AnnulusParams,
    cfg: &TraceConfig,
) -> Result<Vec<BoundaryPoint>> {
    let (w, h) = (grad.width() as f64, grad.height() as f64);
    if !(centre.x >= p.r_max && centre.y >= p.r_max && centre.x <= w - 1.0 - p.r_max && centre.y <= h - 1.0 - p.r_max) {
        return Err(Error::Bounds(format!(
            "ray origin ({:.2}, {:.2}) closer than r_max = {} to the border",
            centre.x, centre.y, p.r_max
        )));
    }
    let r_lo = 0.5 * p.r_min;
    let r_hi = 1.5 * p.r_max;
    let cos_limit = cfg.max_deviation_deg.to_radians().cos();
    let n_steps = ((r_hi - r_lo) / cfg.step).floor() as usize + 1;
    let mut profile = Vec::with_capacity(n_steps);
    let mut out = Vec::new();

    for i in 0..cfg.n_rays {
        let angle = 2.0 * PI * i as f64 / cfg.n_rays as f64;
        let dir = Point2::new(angle.cos(), angle.sin());
        profile.clear();
        for s in 0..n_steps {
            let r = r_lo + s as f64 * cfg.step;
            let pos = centre + dir * r;
            // stay off the invalid one-pixel gradient border
            if pos.x < 1.0 || pos.y < 1.0 || pos.x > w - 2.0 || pos.y > h - 2.0 {
                break;
            }
            let Some(g) = grad.sample(pos.x, pos.y) else { break };
            profile.push((r, g));
        }
        let mut best: Option<(usize, f64)> = None;
        for (s, &(_, g)) in profile.iter().enumerate() {
            let mag = g.norm();
            let along = g.dot(dir);
            if mag > cfg.edge_threshold && along > cos_limit * mag && best.is_none_or(|(_, v)| along > v) {
                best = Some((s, along));
            }
        }
        let Some((s, peak)) = best else { continue };
        let at = |k: usize| profile[k].1.dot(dir);
        let offset = if s > 0 && s + 1 < profile.len() { parabolic_offset(at(s - 1), peak, at(s + 1)) } else { 0.0 };
        let radius = (profile[s].0 + offset * cfg.step).clamp(r_lo, r_hi);
        let position = centre + dir * radius;
        let gradient = grad
            .sample(position.x, position.y)
            .and_then(Point2::normalized)
            .or_else(|| profile[s].1.normalized())
            .unwrap_or(dir);
        out.push(BoundaryPoint { angle, radius, position, gradient });
    }
    Ok(out)
}

/// Circular running median of the radii over `window` neighbours in angle
/// order; points deviating from it by more than `max_deviation` pixels are
/// dropped. Fewer points than `window` pass through unchanged.
pub fn polar_median_filter(points: &[BoundaryPoint], window: usize, max_deviation: f64) -> Result<Vec<BoundaryPoint>> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::Argument(format!("median window must be odd and >= 3, got {window}")));
    }
    if points.len() < window {
        return Ok(points.to_vec());
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    let n = sorted.len();
    let half = window / 2;
    let mut buf = Vec::with_capacity(window);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        buf.clear();
        buf.extend((0..window).map(|k| sorted[(i + n + k - half) % n].radius));
        buf.sort_by(f64::total_cmp);
        let median = buf[half];
        if (sorted[i].radius - median).abs() <= max_deviation {
            out.push(sorted[i]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{scharr_gradients, GrayImage};
    use crate::testutil::disc_image;

    fn params() -> AnnulusParams {
        AnnulusParams::with_radii(7.0, 13.0).unwrap()
    }

    #[test]
    fn radii_on_clean_disc() {
        let c = Point2::new(30.0, 28.0);
        let img = disc_image(60, 56, c, 10.0, 40.0, 200.0);
        let g = scharr_gradients(&img).unwrap();
        let pts = trace_boundary(&g, c, &params(), &TraceConfig::default()).unwrap();
        assert_eq!(pts.len(), 64);
        for p in &pts {
            assert!((9.5..=10.5).contains(&p.radius), "{p:?}");
            assert!((p.gradient.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_roi_has_no_edges() {
        let g = scharr_gradients(&GrayImage::filled(60, 56, 90.0)).unwrap();
        assert!(trace_boundary(&g, Point2::new(30.0, 28.0), &params(), &TraceConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn flat_lid_blocks_upward_rays() {
        let c = Point2::new(30.0, 28.0);
        let disc = disc_image(60, 56, c, 10.0, 40.0, 200.0);
        // upper half replaced by the background intensity
        let img = GrayImage::from_fn(60, 56, |x, y| if (y as f64) < c.y { 200.0 } else { disc.get(x, y) });
        let g = scharr_gradients(&img).unwrap();
        let pts = trace_boundary(&g, c, &params(), &TraceConfig::default()).unwrap();
        assert!(pts.len() >= 25);
        for p in &pts {
            assert!(p.angle.sin() > -0.2, "upward ray kept: {p:?}");
        }
    }

    #[test]
    fn origin_near_border() {
        let g = scharr_gradients(&GrayImage::filled(60, 56, 90.0)).unwrap();
        let r = trace_boundary(&g, Point2::new(5.0, 28.0), &params(), &TraceConfig::default());
        assert!(matches!(r, Err(Error::Bounds(_))));
    }

    fn ring(radii: &[f64]) -> Vec<BoundaryPoint> {
        let n = radii.len();
        radii
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let angle = 2.0 * PI * i as f64 / n as f64;
                BoundaryPoint {
                    angle,
                    radius: r,
                    position: Point2::new(r * angle.cos(), r * angle.sin()),
                    gradient: Point2::new(angle.cos(), angle.sin()),
                }
            })
            .collect()
    }

    #[test]
    fn median_filter_cases() {
        let flat = ring(&[10.0; 16]);
        assert_eq!(polar_median_filter(&flat, 5, 2.0).unwrap(), flat);

        let mut radii = [10.0; 16];
        radii[6] = 25.0;
        let filtered = polar_median_filter(&ring(&radii), 5, 2.0).unwrap();
        assert_eq!(filtered.len(), 15);
        assert!(filtered.iter().all(|p| p.radius == 10.0));

        // wrap-around: the spike sits at the first index
        let mut radii = [10.0; 16];
        radii[0] = 25.0;
        assert_eq!(polar_median_filter(&ring(&radii), 5, 2.0).unwrap().len(), 15);

        let few = ring(&[10.0, 30.0, 10.0]);
        assert_eq!(polar_median_filter(&few, 5, 2.0).unwrap(), few);
        assert!(polar_median_filter(&few, 4, 2.0).is_err());
    }
}
