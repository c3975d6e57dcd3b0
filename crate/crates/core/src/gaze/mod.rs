//! Gaze estimation from eye-corner/iris-centre vectors.

mod corner;
mod regression;

pub use corner::{detect_inner_corner, detect_inner_corner_excluding, harris_response, nasal_columns, CornerConfig};
pub use regression::{
    default_sigma, ecic, fit_poly, fit_rbf_samples, predict_poly, predict_rbf, rbf_features, rbf_transform,
    CalibrationModel, EcIcVector, PolyModel, RbfModel, RBF_RIDGE,
};

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Point2, Result, Side};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ScreenGeometry {
    pub width_px: f64,
    pub height_px: f64,
    pub width_mm: f64,
    pub height_mm: f64,
    pub head_distance_mm: f64,
}

impl Default for ScreenGeometry {
    /// 1366x768 panel, 344 mm wide, viewed from 600 mm.
    fn default() -> Self {
        Self {
            width_px: 1366.0,
            height_px: 768.0,
            width_mm: 344.0,
            height_mm: 344.0 * 768.0 / 1366.0,
            head_distance_mm: 600.0,
        }
    }
}

impl ScreenGeometry {
    pub fn validate(&self) -> Result<()> {
        let v = [self.width_px, self.height_px, self.width_mm, self.height_mm, self.head_distance_mm];
        if v.iter().all(|x| *x > 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(format!("screen geometry must be positive: {self:?}")))
        }
    }

    pub fn centre(&self) -> Point2 {
        Point2::new(self.width_px / 2.0, self.height_px / 2.0)
    }

    pub fn mm_per_px(&self) -> f64 {
        self.width_mm / self.width_px
    }

    /// Uniform `n`x`n` target grid inset by `margin` of each dimension.
    pub fn grid(&self, n: usize, margin: f64) -> Vec<Point2> {
        let mut out = Vec::with_capacity(n * n);
        let span = |len: f64, i: usize| {
            if n == 1 {
                len / 2.0
            } else {
                len * margin + (len * (1.0 - 2.0 * margin)) * i as f64 / (n - 1) as f64
            }
        };
        for j in 0..n {
            for i in 0..n {
                out.push(Point2::new(span(self.width_px, i), span(self.height_px, j)));
            }
        }
        out
    }
}

/// EC-IC vectors captured for both eyes in one calibration frame.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EyePair {
    pub left: Option<EcIcVector>,
    pub right: Option<EcIcVector>,
}

impl EyePair {
    pub fn get(&self, side: Side) -> Option<EcIcVector> {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationSet {
    pub grid: Vec<Point2>,
    /// `samples[i]` holds the frames recorded while looking at `grid[i]`.
    pub samples: Vec<Vec<EyePair>>,
    /// Angle of the inter-corner line during calibration, radians.
    pub baseline_angle: f64,
}

impl CalibrationSet {
    pub fn new(grid: Vec<Point2>, baseline_angle: f64) -> Self {
        let samples = grid.iter().map(|_| Vec::new()).collect();
        Self { grid, samples, baseline_angle }
    }

    pub fn push(&mut self, target: usize, pair: EyePair) -> Result<()> {
        let n = self.grid.len();
        self.samples
            .get_mut(target)
            .ok_or_else(|| Error::Calibration(format!("target {target} outside grid of {n}")))?
            .push(pair);
        Ok(())
    }

    /// Flattened `(vector, target)` pairs for one eye.
    pub fn eye_samples(&self, side: Side) -> Vec<(EcIcVector, Point2)> {
        self.grid
            .iter()
            .zip(&self.samples)
            .flat_map(|(t, s)| s.iter().filter_map(move |p| p.get(side).map(|v| (v, *t))))
            .collect()
    }

    fn check(&self) -> Result<()> {
        if self.grid.is_empty() || self.grid.len() != self.samples.len() {
            return Err(Error::Calibration("calibration grid and samples disagree".into()));
        }
        Ok(())
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Componentwise median EC-IC vector of each calibration target for one eye.
pub fn compute_landmarks(cal: &CalibrationSet, side: Side) -> Result<Vec<Point2>> {
    cal.check()?;
    cal.samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (mut xs, mut ys): (Vec<f64>, Vec<f64>) =
                s.iter().filter_map(|p| p.get(side)).map(|v| (v.x, v.y)).unzip();
            if xs.is_empty() {
                return Err(Error::Calibration(format!("no {side:?} samples at calibration point {i}")));
            }
            Ok(Point2::new(median(&mut xs), median(&mut ys)))
        })
        .collect()
}

/// RBF model for one eye; `sigma_k` defaults to the mean nearest-landmark distance.
pub fn fit_rbf(cal: &CalibrationSet, side: Side, sigma_k: Option<f64>) -> Result<RbfModel> {
    let landmarks = compute_landmarks(cal, side)?;
    let sigma = match sigma_k {
        Some(s) => s,
        None => default_sigma(&landmarks)?,
    };
    fit_rbf_samples(&cal.eye_samples(side), landmarks, sigma)
}

pub fn fit_poly_eye(cal: &CalibrationSet, side: Side) -> Result<PolyModel> {
    cal.check()?;
    fit_poly(&cal.eye_samples(side))
}

/// Per-eye models plus the calibration head roll.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GazeModels {
    pub left: CalibrationModel,
    pub right: CalibrationModel,
    pub baseline_angle: f64,
}

/// Angle of the line from the left to the right inner corner.
pub fn inter_corner_angle(left_corner: Point2, right_corner: Point2) -> f64 {
    let d = right_corner - left_corner;
    d.y.atan2(d.x)
}

/// Rotates `p` by `theta` about the screen centre, using the standard matrix
/// `[cos -sin; sin cos]` on image coordinates.
pub fn rotation_correct(p: Point2, theta: f64, geom: &ScreenGeometry) -> Point2 {
    let c = geom.centre();
    c + (p - c).rotated(theta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PogEstimate {
    pub point: Point2,
    /// Set when only one eye contributed.
    pub monocular: bool,
}

/// Averages the available per-eye predictions and applies the roll correction.
pub fn estimate_pog(
    left: Option<EcIcVector>,
    right: Option<EcIcVector>,
    models: &GazeModels,
    theta: f64,
    geom: &ScreenGeometry,
) -> Result<PogEstimate> {
    let (point, monocular) = match (left, right) {
        (Some(l), Some(r)) => ((models.left.predict(l) + models.right.predict(r)) * 0.5, false),
        (Some(l), None) => (models.left.predict(l), true),
        (None, Some(r)) => (models.right.predict(r), true),
        (None, None) => return Err(Error::Argument("no eye available for gaze estimation".into())),
    };
    Ok(PogEstimate { point: rotation_correct(point, theta, geom), monocular })
}

/// Angular size, degrees, of an on-screen error of `err_px` pixels.
pub fn angular_accuracy(err_px: f64, geom: &ScreenGeometry) -> f64 {
    (err_px * geom.mm_per_px() / geom.head_distance_mm).atan().to_degrees()
}
