use super::GrayImage;
use crate::{Error, Result};

/// CDF-based histogram equalization over 256 bins.
///
/// Values are binned by rounding. A single occupied bin leaves the image
/// unchanged.
pub fn hist_equalize(img: &GrayImage) -> Result<GrayImage> {
    let n = img.data().len();
    if n == 0 {
        return Err(Error::Dimension("empty image".into()));
    }
    let bin = |v: f64| (v + 0.5).clamp(0.0, 255.0) as usize;
    let mut hist = [0usize; 256];
    for &v in img.data() {
        hist[bin(v)] += 1;
    }
    let mut cdf = [0usize; 256];
    let mut acc = 0;
    for (c, h) in cdf.iter_mut().zip(hist) {
        acc += h;
        *c = acc;
    }
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    if n == cdf_min {
        return Ok(img.clone());
    }
    let denom = (n - cdf_min) as f64;
    let mut lut = [0.0f64; 256];
    for (l, &c) in lut.iter_mut().zip(&cdf) {
        *l = (((c.saturating_sub(cdf_min)) as f64 / denom) * 255.0 + 0.5).clamp(0.0, 255.0) as u32 as f64;
    }
    Ok(GrayImage::from_fn(img.width(), img.height(), |x, y| lut[bin(img.get(x, y))]))
}
