use alloc::format;

use super::{GrayImage, Surface};
use crate::{Error, Result};

/// Bilinear resampling to `round(w * factor) x round(h * factor)`.
pub fn downscale(img: &GrayImage, factor: f64) -> Result<GrayImage> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::Argument(format!("scale factor {factor} outside (0, 1]")));
    }
    let w = (img.width() as f64 * factor).round() as usize;
    let h = (img.height() as f64 * factor).round() as usize;
    if w < 8 || h < 8 {
        return Err(Error::Argument(format!("downscaled size {w}x{h} below 8x8")));
    }
    resize(img, w, h)
}

/// Bilinear resize with pixel-centre alignment and edge clamping.
pub fn resize(img: &GrayImage, width: usize, height: usize) -> Result<GrayImage> {
    if width == 0 || height == 0 || img.width() == 0 || img.height() == 0 {
        return Err(Error::Dimension("empty image in resize".into()));
    }
    if width == img.width() && height == img.height() {
        return Ok(img.clone());
    }
    let sx = img.width() as f64 / width as f64;
    let sy = img.height() as f64 / height as f64;
    let max_x = (img.width() - 1) as f64;
    let max_y = (img.height() - 1) as f64;
    let src = img.as_surface();
    let out = Surface::from_fn(width, height, |x, y| {
        let u = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
        let v = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        src.sample(u, v).unwrap_or(0.0)
    });
    Ok(GrayImage::from_surface_clamped(out))
}

/// Maps a source coordinate into an image resampled by `scale`, under the
/// pixel-centre convention used by [`resize`].
pub fn scale_coordinate(v: f64, scale: f64) -> f64 {
    (v + 0.5) * scale - 0.5
}
