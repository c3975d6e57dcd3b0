//! Inner eye-corner localization from the Harris response.

use crate::geometry::parabolic_offset;
use crate::imgcore::{convolve2d, scharr_gradients, ConvMode, GradientField, Kernel2D, Surface};
use crate::{GrayImage, Point2, Result, Side};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CornerConfig {
    /// Harris sensitivity `k` in `det - k tr^2`.
    pub k: f64,
    /// Gaussian integration scale, pixels.
    pub sigma: f64,
    /// Minimum response for a detection, in (intensity/pixel)^4.
    pub floor: f64,
    /// Half-width of the gradient-line intersection refinement window;
    /// 0 keeps the parabolic estimate.
    pub refine_radius: usize,
}

impl Default for CornerConfig {
    fn default() -> Self {
        Self { k: 0.04, sigma: 1.0, floor: 1.0, refine_radius: 4 }
    }
}

fn gaussian_kernel(sigma: f64) -> Result<Kernel2D> {
    let r = (3.0 * sigma).ceil().max(1.0) as isize;
    let size = (2 * r + 1) as usize;
    let k = Kernel2D::from_offsets(size, |m, n| (-((m * m + n * n) as f64) / (2.0 * sigma * sigma)).exp())?;
    let s = k.sum();
    Ok(k.scaled(1.0 / s))
}

/// Harris corner response of `img`; gradients are normalized to intensity per pixel.
pub fn harris_response(img: &GrayImage, cfg: &CornerConfig) -> Result<Surface> {
    harris_from_gradients(&scharr_gradients(img)?, cfg)
}

fn harris_from_gradients(g: &GradientField, cfg: &CornerConfig) -> Result<Surface> {
    let (w, h) = (g.width(), g.height());
    let norm = 1.0 / 32.0;
    let mut xx = Surface::zeros(w, h);
    let mut yy = Surface::zeros(w, h);
    let mut xy = Surface::zeros(w, h);
    for i in 0..w * h {
        let (gx, gy) = (g.gx.data()[i] * norm, g.gy.data()[i] * norm);
        xx.data_mut()[i] = gx * gx;
        yy.data_mut()[i] = gy * gy;
        xy.data_mut()[i] = gx * gy;
    }
    let win = gaussian_kernel(cfg.sigma)?;
    let (sxx, syy, sxy) = if win.size() <= w && win.size() <= h {
        (
            convolve2d(&xx, &win, ConvMode::Spatial)?,
            convolve2d(&yy, &win, ConvMode::Spatial)?,
            convolve2d(&xy, &win, ConvMode::Spatial)?,
        )
    } else {
        (xx, yy, xy)
    };
    Ok(Surface::from_fn(w, h, |x, y| {
        let (a, b, c) = (sxx.get(x, y), syy.get(x, y), sxy.get(x, y));
        a * b - c * c - cfg.k * (a + b) * (a + b)
    }))
}

/// Column range `[x0, x1)` of the nasal third of an eye ROI of width `w`.
/// The image-left eye has its nasal side on the right.
pub fn nasal_columns(w: usize, side: Side) -> (usize, usize) {
    let third = (w / 3).max(1);
    match side {
        Side::Left => (w - third, w),
        Side::Right => (0, third),
    }
}

/// Strongest Harris response in the nasal third, sub-pixel refined;
/// `None` when nothing clears the floor.
pub fn detect_inner_corner(eye_roi: &GrayImage, side: Side, cfg: &CornerConfig) -> Result<Option<Point2>> {
    detect_inner_corner_excluding(eye_roi, side, cfg, None)
}

/// As [`detect_inner_corner`], ignoring responses inside the disc
/// `(centre, radius)`, typically the located iris.
pub fn detect_inner_corner_excluding(
    eye_roi: &GrayImage,
    side: Side,
    cfg: &CornerConfig,
    exclude: Option<(Point2, f64)>,
) -> Result<Option<Point2>> {
    let g = scharr_gradients(eye_roi)?;
    let r = harris_from_gradients(&g, cfg)?;
    let (w, h) = (r.width(), r.height());
    let (x0, x1) = nasal_columns(w, side);
    // zero padding makes the ROI border itself a strong corner
    let m = 2 + (3.0 * cfg.sigma).ceil() as usize;
    let mut best: Option<(usize, usize, f64)> = None;
    for y in m..h.saturating_sub(m) {
        for x in x0.max(m)..x1.min(w.saturating_sub(m)) {
            if exclude.is_some_and(|(c, rad)| Point2::new(x as f64, y as f64).distance(c) <= rad) {
                continue;
            }
            let v = r.get(x, y);
            if v > cfg.floor && best.is_none_or(|(_, _, b)| v > b) {
                best = Some((x, y, v));
            }
        }
    }
    let Some((x, y, v)) = best else { return Ok(None) };
    let dx = if x > 0 && x + 1 < w { parabolic_offset(r.get(x - 1, y), v, r.get(x + 1, y)) } else { 0.0 };
    let dy = if y > 0 && y + 1 < h { parabolic_offset(r.get(x, y - 1), v, r.get(x, y + 1)) } else { 0.0 };
    let p = Point2::new(x as f64 + dx, y as f64 + dy);
    Ok(Some(intersect_gradient_lines(&g, p, cfg.refine_radius).unwrap_or(p)))
}

/// Point minimizing the gradient-weighted squared distance to the edge
/// tangent lines of a window around `start`; every straight edge through a
/// corner passes through it. `None` when the window is degenerate or the
/// estimate leaves the window.
fn intersect_gradient_lines(g: &GradientField, start: Point2, radius: usize) -> Option<Point2> {
    if radius == 0 {
        return None;
    }
    let (w, h) = (g.width() as isize, g.height() as isize);
    let r = radius as isize;
    let mut p = start;
    for _ in 0..10 {
        let (cx, cy) = (p.x.round() as isize, p.y.round() as isize);
        let (mut a, mut b, mut c, mut bx, mut by) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for y in (cy - r).max(1)..=(cy + r).min(h - 2) {
            for x in (cx - r).max(1)..=(cx + r).min(w - 2) {
                let (gx, gy) = (g.gx.get(x as usize, y as usize), g.gy.get(x as usize, y as usize));
                let (xx, yy, xy) = (gx * gx, gy * gy, gx * gy);
                a += xx;
                b += xy;
                c += yy;
                bx += xx * x as f64 + xy * y as f64;
                by += xy * x as f64 + yy * y as f64;
            }
        }
        let det = a * c - b * b;
        if !(det > 1e-9 * (a + c) * (a + c)) {
            return None;
        }
        let next = Point2::new((c * bx - b * by) / det, (a * by - b * bx) / det);
        if next.distance(start) > radius as f64 {
            return None;
        }
        let done = next.distance(p) < 1e-3;
        p = next;
        if done {
            break;
        }
    }
    Some(p)
}
