//! Histogram of oriented gradients over a normalized eye patch.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::imgcore::{hist_equalize, resize};
use crate::{Error, GrayImage, Result};

/// Side of the normalized eye patch.
pub const PATCH_SIDE: usize = 30;
const CLIP: f64 = 0.2;
const EPS2: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct HogConfig {
    pub cell_size: usize,
    pub n_orientations: usize,
    /// Cells per block side; blocks stride one cell.
    pub block: usize,
}

impl Default for HogConfig {
    fn default() -> Self {
        Self { cell_size: 4, n_orientations: 8, block: 2 }
    }
}

impl HogConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cell_size == 0 || self.n_orientations == 0 || self.block == 0 || self.cells() < self.block {
            return Err(Error::Config(format!("unusable HOG layout {self:?}")));
        }
        Ok(())
    }

    /// Cells per side; trailing pixels that do not fill a cell are dropped.
    pub fn cells(&self) -> usize {
        PATCH_SIDE / self.cell_size.max(1)
    }

    pub fn feature_len(&self) -> usize {
        let blocks = self.cells() + 1 - self.block;
        blocks * blocks * self.block * self.block * self.n_orientations
    }
}

/// Histogram equalization followed by a bilinear resize to 30x30.
pub fn preprocess_eye(roi: &GrayImage) -> Result<GrayImage> {
    if roi.width() == 0 || roi.height() == 0 {
        return Err(Error::Dimension("empty eye ROI".into()));
    }
    resize(&hist_equalize(roi)?, PATCH_SIDE, PATCH_SIDE)
}

pub fn hog_features(img: &GrayImage, cfg: &HogConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if img.width() != PATCH_SIDE || img.height() != PATCH_SIDE {
        return Err(Error::Dimension(format!(
            "HOG expects {PATCH_SIDE}x{PATCH_SIDE}, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let nb = cfg.n_orientations;
    let cells = cfg.cells();
    let mut hist = vec![0.0; cells * cells * nb];
    let bin_width = PI / nb as f64;
    let px = |x: isize, y: isize| {
        let cx = x.clamp(0, PATCH_SIDE as isize - 1) as usize;
        let cy = y.clamp(0, PATCH_SIDE as isize - 1) as usize;
        img.get(cx, cy)
    };
    for y in 0..cells * cfg.cell_size {
        for x in 0..cells * cfg.cell_size {
            let (xi, yi) = (x as isize, y as isize);
            let gx = px(xi + 1, yi) - px(xi - 1, yi);
            let gy = px(xi, yi + 1) - px(xi, yi - 1);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let theta = gy.atan2(gx).rem_euclid(PI);
            // bin k is centred at (k + 0.5) * bin_width
            let pos = theta / bin_width - 0.5;
            let lo = pos.floor();
            let frac = pos - lo;
            let b0 = (lo as isize).rem_euclid(nb as isize) as usize;
            let b1 = (b0 + 1) % nb;
            let base = ((y / cfg.cell_size) * cells + x / cfg.cell_size) * nb;
            hist[base + b0] += mag * (1.0 - frac);
            hist[base + b1] += mag * frac;
        }
    }
    let blocks = cells + 1 - cfg.block;
    let block_len = cfg.block * cfg.block * nb;
    let mut out = Vec::with_capacity(cfg.feature_len());
    let mut v = vec![0.0; block_len];
    for by in 0..blocks {
        for bx in 0..blocks {
            let mut k = 0;
            for cy in by..by + cfg.block {
                for cx in bx..bx + cfg.block {
                    let base = (cy * cells + cx) * nb;
                    v[k..k + nb].copy_from_slice(&hist[base..base + nb]);
                    k += nb;
                }
            }
            l2_hys(&mut v);
            out.extend_from_slice(&v);
        }
    }
    Ok(out)
}

fn l2_hys(v: &mut [f64]) {
    let norm = (v.iter().map(|x| x * x).sum::<f64>() + EPS2).sqrt();
    v.iter_mut().for_each(|x| *x = (*x / norm).min(CLIP));
    let norm = (v.iter().map(|x| x * x).sum::<f64>() + EPS2).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}
