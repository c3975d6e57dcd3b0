//! Constant-velocity Kalman filter over `(x, y, vx, vy)`.

use alloc::format;

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};

use crate::{Error, Point2, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfState {
    pub x: Vector4<f64>,
    pub p: Matrix4<f64>,
    pub f: Matrix4<f64>,
    pub q: Matrix4<f64>,
    pub r: Matrix2<f64>,
    pub h: Matrix2x4<f64>,
}

/// Noise settings used to build fresh filters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct KfConfig {
    /// Diagonal of the process noise, px^2 and (px/frame)^2.
    pub q_diag: [f64; 4],
    /// Measurement noise covariance, row-major 2x2.
    pub r: [f64; 4],
    /// Initial position variance.
    pub p0_position: f64,
    /// Initial velocity variance.
    pub p0_velocity: f64,
}

impl Default for KfConfig {
    fn default() -> Self {
        Self { q_diag: [0.05, 0.05, 0.5, 0.5], r: [4.0, 0.0, 0.0, 4.0], p0_position: 4.0, p0_velocity: 10.0 }
    }
}

pub fn transition() -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = 1.0;
    f[(1, 3)] = 1.0;
    f
}

pub fn observation() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

impl KfState {
    pub fn new(x: Vector4<f64>, p: Matrix4<f64>, q: Matrix4<f64>, r: Matrix2<f64>) -> Self {
        Self { x, p, f: transition(), q, r, h: observation() }
    }

    /// Filter at rest at `pos` with the configured noise levels.
    pub fn at_position(pos: Point2, cfg: &KfConfig) -> Self {
        let p =
            Matrix4::from_diagonal(&Vector4::new(cfg.p0_position, cfg.p0_position, cfg.p0_velocity, cfg.p0_velocity));
        let q = Matrix4::from_diagonal(&Vector4::from(cfg.q_diag));
        let r = Matrix2::new(cfg.r[0], cfg.r[1], cfg.r[2], cfg.r[3]);
        Self::new(Vector4::new(pos.x, pos.y, 0.0, 0.0), p, q, r)
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x[0], self.x[1])
    }

    pub fn velocity(&self) -> Point2 {
        Point2::new(self.x[2], self.x[3])
    }
}

pub fn kf_predict(s: &KfState) -> KfState {
    KfState { x: s.f * s.x, p: s.f * s.p * s.f.transpose() + s.q, ..*s }
}

/// Result of a measurement update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfUpdate {
    pub state: KfState,
    /// `false` when the innovation covariance was singular and the prior was kept.
    pub applied: bool,
}

/// Measurement update with the Joseph-form covariance.
pub fn kf_update(s: &KfState, z: Point2) -> KfUpdate {
    let innovation = Vector2::new(z.x, z.y) - s.h * s.x;
    let pht: Matrix4x2<f64> = s.p * s.h.transpose();
    let sm = s.h * pht + s.r;
    let scale = sm.abs().max().max(f64::MIN_POSITIVE);
    let Some(s_inv) = sm.try_inverse().filter(|_| (sm.determinant() / (scale * scale)).abs() > 1e-14) else {
        return KfUpdate { state: *s, applied: false };
    };
    let k = pht * s_inv;
    let ikh = Matrix4::identity() - k * s.h;
    let p = ikh * s.p * ikh.transpose() + k * s.r * k.transpose();
    let p = (p + p.transpose()) * 0.5;
    KfUpdate { state: KfState { x: s.x + k * innovation, p, ..*s }, applied: true }
}

/// Sample covariance of measurement residuals, for use as `R`.
pub fn estimate_measurement_noise(residuals: &[Point2]) -> Result<Matrix2<f64>> {
    if residuals.len() < 2 {
        return Err(Error::Argument(format!("need at least 2 residuals, got {}", residuals.len())));
    }
    let n = residuals.len() as f64;
    let mx = residuals.iter().map(|p| p.x).sum::<f64>() / n;
    let my = residuals.iter().map(|p| p.y).sum::<f64>() / n;
    let mut c = Matrix2::zeros();
    for p in residuals {
        let d = Vector2::new(p.x - mx, p.y - my);
        c += d * d.transpose();
    }
    Ok(c / (n - 1.0))
}
