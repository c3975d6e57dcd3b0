//! Test-only rasterizers, independent of the `synth` renderer.

use crate::imgcore::{GrayImage, Surface};
use crate::Point2;

/// Disc of intensity `inside` on `outside`, 8x8 supersampled.
pub fn disc_image(w: usize, h: usize, c: Point2, r: f64, inside: f64, outside: f64) -> GrayImage {
    GrayImage::from_fn(w, h, |x, y| {
        let mut hits = 0;
        for j in 0..8 {
            for i in 0..8 {
                let px = x as f64 - 0.5 + (i as f64 + 0.5) / 8.0;
                let py = y as f64 - 0.5 + (j as f64 + 0.5) / 8.0;
                if (px - c.x).powi(2) + (py - c.y).powi(2) < r * r {
                    hits += 1;
                }
            }
        }
        let f = hits as f64 / 64.0;
        inside * f + outside * (1.0 - f)
    })
}

pub fn noise_image(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut s = seed;
    GrayImage::from_fn(w, h, |_, _| {
        s = crate::seed::splitmix64(s);
        (s >> 11) as f64 / (1u64 << 53) as f64 * 255.0
    })
}

pub fn max_abs_diff(a: &Surface, b: &Surface) -> f64 {
    a.data().iter().zip(b.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Analytic unit outward-normal field of an ellipse, scaled by `mag`.
pub fn ellipse_gradient_field(w: usize, h: usize, e: &crate::refine::EllipseParams, mag: f64) -> crate::GradientField {
    let (s, c) = e.orientation.sin_cos();
    let dir = |x: usize, y: usize| {
        let d = Point2::new(x as f64 - e.centre.x, y as f64 - e.centre.y);
        let (u, v) = (d.x * c + d.y * s, -d.x * s + d.y * c);
        let (gu, gv) = (u / (e.a * e.a), v / (e.b * e.b));
        Point2::new(gu * c - gv * s, gu * s + gv * c).normalized().unwrap_or(Point2::new(0.0, 0.0)) * mag
    };
    let gx = Surface::from_fn(w, h, |x, y| dir(x, y).x);
    let gy = Surface::from_fn(w, h, |x, y| dir(x, y).y);
    crate::GradientField::new(gx, gy).unwrap()
}
