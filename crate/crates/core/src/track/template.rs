//! Normalized cross-correlation template tracking.

use alloc::format;

use crate::geometry::parabolic_offset;
use crate::{Error, GrayImage, Point2, Result};

pub const DEFAULT_PATCH_SIDE: usize = 15;
pub const DEFAULT_NCC_THRESHOLD: f64 = 0.7;
pub const DEFAULT_SEARCH_RADIUS: usize = 12;

/// Zero-mean normalized cross-correlation of two equally sized patches.
pub fn ncc_score(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Dimension(format!(
            "patch sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    ncc_slices(a.data(), b.data()).ok_or_else(|| Error::UndefinedScore("patch has zero variance".into()))
}

fn ncc_slices(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let denom = (saa * sbb).sqrt();
    if saa <= 1e-12 * n || sbb <= 1e-12 * n || denom == 0.0 {
        return None;
    }
    Some((sab / denom).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CornerTemplate {
    pub patch: GrayImage,
    pub last_position: Point2,
    pub ncc_threshold: f64,
    pub search_radius: usize,
}

/// Outcome of one tracking step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrackOutcome {
    Found {
        position: Point2,
        score: f64,
    },
    /// Best score stayed below the threshold or the window left the frame.
    Reinit {
        best_score: Option<f64>,
    },
}

impl CornerTemplate {
    pub fn new(patch: GrayImage, last_position: Point2, ncc_threshold: f64, search_radius: usize) -> Result<Self> {
        if patch.width() != patch.height() || patch.width().is_multiple_of(2) {
            return Err(Error::Argument(format!(
                "template must be odd square, got {}x{}",
                patch.width(),
                patch.height()
            )));
        }
        if !(ncc_threshold > -1.0 && ncc_threshold < 1.0) {
            return Err(Error::Argument(format!("NCC threshold {ncc_threshold} outside (-1, 1)")));
        }
        Ok(Self { patch, last_position, ncc_threshold, search_radius })
    }

    /// Cuts a `side`x`side` patch centred on the rounded `at` from `frame`.
    pub fn capture(frame: &GrayImage, at: Point2, side: usize) -> Result<Self> {
        let patch = cut_patch(frame, at, side)?;
        Self::new(patch, at, DEFAULT_NCC_THRESHOLD, DEFAULT_SEARCH_RADIUS)
    }

    /// Replaces the patch after a reinitialization at `at`.
    pub fn recapture(&mut self, frame: &GrayImage, at: Point2) -> Result<()> {
        self.patch = cut_patch(frame, at, self.patch.width())?;
        self.last_position = at;
        Ok(())
    }

    fn half(&self) -> usize {
        self.patch.width() / 2
    }
}

fn cut_patch(frame: &GrayImage, at: Point2, side: usize) -> Result<GrayImage> {
    if side.is_multiple_of(2) || side == 0 {
        return Err(Error::Argument(format!("patch side must be odd, got {side}")));
    }
    let half = (side / 2) as f64;
    let (cx, cy) = (at.x.round(), at.y.round());
    if cx - half < 0.0 || cy - half < 0.0 || cx + half >= frame.width() as f64 || cy + half >= frame.height() as f64 {
        return Err(Error::Bounds(format!("patch around ({:.1}, {:.1}) leaves the frame", at.x, at.y)));
    }
    frame.crop((cx - half) as usize, (cy - half) as usize, side, side)
}

/// Exhaustive NCC search in `last_position +- search_radius`, clipped to the
/// frame, with parabolic sub-pixel refinement of the best match.
pub fn track_template(frame: &GrayImage, t: &CornerTemplate) -> TrackOutcome {
    let half = t.half() as i64;
    let side = t.patch.width();
    let (w, h) = (frame.width() as i64, frame.height() as i64);
    let (cx, cy) = (t.last_position.x.round() as i64, t.last_position.y.round() as i64);
    let r = t.search_radius as i64;
    let x0 = (cx - r).max(half);
    let x1 = (cx + r).min(w - 1 - half);
    let y0 = (cy - r).max(half);
    let y1 = (cy + r).min(h - 1 - half);
    if x0 > x1 || y0 > y1 {
        return TrackOutcome::Reinit { best_score: None };
    }
    let gw = (x1 - x0 + 1) as usize;
    let gh = (y1 - y0 + 1) as usize;
    let mut scores = alloc::vec![f64::NEG_INFINITY; gw * gh];
    let mut window = alloc::vec![0.0; side * side];
    let fd = frame.data();
    let fw = frame.width();
    for gy in 0..gh {
        for gx in 0..gw {
            let (px, py) = ((x0 + gx as i64 - half) as usize, (y0 + gy as i64 - half) as usize);
            for j in 0..side {
                let row = (py + j) * fw + px;
                window[j * side..(j + 1) * side].copy_from_slice(&fd[row..row + side]);
            }
            if let Some(s) = ncc_slices(&window, t.patch.data()) {
                scores[gy * gw + gx] = s;
            }
        }
    }
    let (best, &score) =
        scores.iter().enumerate().fold((0, &f64::NEG_INFINITY), |acc, (i, s)| if *s > *acc.1 { (i, s) } else { acc });
    if !score.is_finite() {
        return TrackOutcome::Reinit { best_score: None };
    }
    if score < t.ncc_threshold {
        return TrackOutcome::Reinit { best_score: Some(score) };
    }
    let (bx, by) = (best % gw, best / gw);
    if score >= 1.0 - 1e-12 {
        // a perfect match already sits on the grid
        return TrackOutcome::Found { position: Point2::new((x0 + bx as i64) as f64, (y0 + by as i64) as f64), score };
    }
    let at = |x: usize, y: usize| scores[y * gw + x];
    let dx = if bx > 0 && bx + 1 < gw && at(bx - 1, by).is_finite() && at(bx + 1, by).is_finite() {
        parabolic_offset(at(bx - 1, by), score, at(bx + 1, by))
    } else {
        0.0
    };
    let dy = if by > 0 && by + 1 < gh && at(bx, by - 1).is_finite() && at(bx, by + 1).is_finite() {
        parabolic_offset(at(bx, by - 1), score, at(bx, by + 1))
    } else {
        0.0
    };
    TrackOutcome::Found { position: Point2::new((x0 + bx as i64) as f64 + dx, (y0 + by as i64) as f64 + dy), score }
}
