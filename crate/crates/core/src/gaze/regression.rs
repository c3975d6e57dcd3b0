//! Calibration regressions from EC-IC vectors to screen coordinates.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::{Error, Point2, Result};

/// Iris centre minus inner eye corner, pixels.
pub type EcIcVector = Point2;

pub fn ecic(corner: Point2, iris: Point2) -> EcIcVector {
    iris - corner
}

/// Second-order polynomial: `X = a . (x, y, xy, x^2, y^2, 1)`, likewise `Y` with `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolyModel {
    pub a: [f64; 6],
    pub b: [f64; 6],
}

fn poly_basis(v: EcIcVector) -> [f64; 6] {
    [v.x, v.y, v.x * v.y, v.x * v.x, v.y * v.y, 1.0]
}

fn solve_least_squares(design: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= 1e-10 * smax {
        return Err(Error::Calibration(format!("rank-deficient design (singular values {smin:.3e} / {smax:.3e})")));
    }
    svd.solve(targets, 0.0).map_err(|e| Error::Calibration(e.into()))
}

pub fn fit_poly(samples: &[(EcIcVector, Point2)]) -> Result<PolyModel> {
    if samples.len() < 6 {
        return Err(Error::Calibration(format!("polynomial fit needs 6 samples, got {}", samples.len())));
    }
    let n = samples.len();
    let design = DMatrix::from_fn(n, 6, |i, j| poly_basis(samples[i].0)[j]);
    let targets = DMatrix::from_fn(n, 2, |i, j| if j == 0 { samples[i].1.x } else { samples[i].1.y });
    let sol = solve_least_squares(&design, &targets)?;
    let mut m = PolyModel { a: [0.0; 6], b: [0.0; 6] };
    for j in 0..6 {
        m.a[j] = sol[(j, 0)];
        m.b[j] = sol[(j, 1)];
    }
    Ok(m)
}

pub fn predict_poly(m: &PolyModel, v: EcIcVector) -> Point2 {
    let f = poly_basis(v);
    let dot = |c: &[f64; 6]| c.iter().zip(&f).map(|(p, q)| p * q).sum::<f64>();
    Point2::new(dot(&m.a), dot(&m.b))
}

/// Gaussian-kernel regression anchored on one landmark per calibration target.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RbfModel {
    pub landmarks: Vec<Point2>,
    pub sigma_k: f64,
    /// Weights for screen X; the last entry multiplies the constant feature.
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
}

pub const RBF_RIDGE: f64 = 1e-6;

/// Kernel evaluations against every landmark followed by a constant 1.
pub fn rbf_features(v: EcIcVector, landmarks: &[Point2], sigma_k: f64) -> Vec<f64> {
    let denom = 2.0 * sigma_k * sigma_k;
    let mut out: Vec<f64> = landmarks.iter().map(|l| (-(v - *l).dot(v - *l) / denom).exp()).collect();
    out.push(1.0);
    out
}

pub fn rbf_transform(v: EcIcVector, m: &RbfModel) -> Vec<f64> {
    rbf_features(v, &m.landmarks, m.sigma_k)
}

/// Mean distance from each landmark to its nearest neighbour.
pub fn default_sigma(landmarks: &[Point2]) -> Result<f64> {
    if landmarks.len() < 2 {
        return Err(Error::Calibration("need at least two landmarks for a kernel width".into()));
    }
    let total: f64 = landmarks
        .iter()
        .enumerate()
        .map(|(i, p)| {
            landmarks
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.distance(*q))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    let sigma = total / landmarks.len() as f64;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Calibration("landmarks coincide".into()));
    }
    Ok(sigma)
}

/// Ridge regression from kernel features of `samples` to their screen targets.
pub fn fit_rbf_samples(samples: &[(EcIcVector, Point2)], landmarks: Vec<Point2>, sigma_k: f64) -> Result<RbfModel> {
    if !(sigma_k > 0.0 && sigma_k.is_finite()) {
        return Err(Error::Calibration(format!("kernel width must be positive, got {sigma_k}")));
    }
    if landmarks.is_empty() || samples.is_empty() {
        return Err(Error::Calibration("RBF fit needs landmarks and samples".into()));
    }
    let d = landmarks.len() + 1;
    let phi: Vec<Vec<f64>> = samples.iter().map(|(v, _)| rbf_features(*v, &landmarks, sigma_k)).collect();
    // ridge as extra rows keeps the conditioning of the design itself
    let n = samples.len();
    let root = RBF_RIDGE.sqrt();
    let design = DMatrix::from_fn(n + d, d, |i, j| {
        if i < n {
            phi[i][j]
        } else if i - n == j {
            root
        } else {
            0.0
        }
    });
    let targets = DMatrix::from_fn(n + d, 2, |i, j| match (i < n, j) {
        (true, 0) => samples[i].1.x,
        (true, _) => samples[i].1.y,
        _ => 0.0,
    });
    let sol = design
        .svd(true, true)
        .solve(&targets, 0.0)
        .map_err(|e| Error::Calibration(format!("kernel regression failed: {e}")))?;
    let wx = sol.column(0).into_owned();
    let wy = sol.column(1).into_owned();
    if wx.iter().chain(wy.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Calibration("non-finite kernel weights".into()));
    }
    Ok(RbfModel { landmarks, sigma_k, wx: wx.iter().copied().collect(), wy: wy.iter().copied().collect() })
}

pub fn predict_rbf(m: &RbfModel, v: EcIcVector) -> Point2 {
    let f = rbf_transform(v, m);
    let dot = |w: &[f64]| w.iter().zip(&f).map(|(p, q)| p * q).sum::<f64>();
    Point2::new(dot(&m.wx), dot(&m.wy))
}

/// Either calibration model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum CalibrationModel {
    Poly(PolyModel),
    Rbf(RbfModel),
}

impl CalibrationModel {
    pub fn predict(&self, v: EcIcVector) -> Point2 {
        match self {
            CalibrationModel::Poly(m) => predict_poly(m, v),
            CalibrationModel::Rbf(m) => predict_rbf(m, v),
        }
    }
}
