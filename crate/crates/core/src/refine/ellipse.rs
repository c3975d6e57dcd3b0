//! Direct least-squares ellipse fitting and ellipse geometry.

use alloc::format;
use core::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Point2, Result};

/// Geometric ellipse. `orientation` is the angle of the major axis from +x
/// towards +y (image axes), normalized to `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EllipseParams {
    pub centre: Point2,
    pub a: f64,
    pub b: f64,
    pub orientation: f64,
}

impl EllipseParams {
    /// Builds an ellipse, swapping axes if needed so that `a >= b`.
    pub fn new(centre: Point2, a: f64, b: f64, orientation: f64) -> Self {
        let (a, b, orientation) = if b > a { (b, a, orientation + PI / 2.0) } else { (a, b, orientation) };
        Self { centre, a, b, orientation: normalize_angle(orientation) }
    }

    pub fn circle(centre: Point2, r: f64) -> Self {
        Self { centre, a: r, b: r, orientation: 0.0 }
    }

    fn axes(&self) -> (Point2, Point2) {
        let (s, c) = self.orientation.sin_cos();
        (Point2::new(c, s), Point2::new(-s, c))
    }

    /// Point at parametric angle `t`.
    pub fn point_at(&self, t: f64) -> Point2 {
        let (u, v) = self.axes();
        let (s, c) = t.sin_cos();
        self.centre + u * (self.a * c) + v * (self.b * s)
    }

    /// Unit outward normal at parametric angle `t`.
    pub fn normal_at(&self, t: f64) -> Point2 {
        let (u, v) = self.axes();
        let (s, c) = t.sin_cos();
        (u * (c / self.a) + v * (s / self.b)).normalized().unwrap_or(u)
    }

    fn to_local(&self, p: Point2) -> Point2 {
        let (u, v) = self.axes();
        let d = p - self.centre;
        Point2::new(d.dot(u), d.dot(v))
    }

    /// Parametric angle of the ellipse point sharing `p`'s polar angle.
    pub fn nearest_parameter(&self, p: Point2) -> f64 {
        let q = self.to_local(p);
        (self.a * q.y).atan2(self.b * q.x)
    }

    /// Signed distance (positive outside) measured along the normal at the
    /// angularly nearest ellipse point, and that outward normal.
    pub fn approx_distance(&self, p: Point2) -> (f64, Point2) {
        let t = self.nearest_parameter(p);
        let n = self.normal_at(t);
        ((p - self.point_at(t)).dot(n), n)
    }

    pub fn is_valid(&self) -> bool {
        self.centre.is_finite() && self.a.is_finite() && self.b > 0.0 && self.a >= self.b
    }

    /// Copy translated by `d`.
    pub fn translated(&self, d: Point2) -> Self {
        Self { centre: self.centre + d, ..*self }
    }
}

pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// General conic `A x^2 + B xy + C y^2 + D x + E y + F = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conic(pub [f64; 6]);

impl Conic {
    /// Geometric parameters, or `None` if the conic is not a real ellipse.
    pub fn to_ellipse(&self) -> Option<EllipseParams> {
        let [mut a, mut b, mut c, mut d, mut e, mut f] = self.0;
        if a + c < 0.0 {
            [a, b, c, d, e, f] = [-a, -b, -c, -d, -e, -f];
        }
        let det = 4.0 * a * c - b * b;
        if !(det > 0.0) {
            return None;
        }
        let xc = (b * e - 2.0 * c * d) / det;
        let yc = (b * d - 2.0 * a * e) / det;
        let f0 = f + 0.5 * (d * xc + e * yc);
        if !(f0 < 0.0) {
            return None;
        }
        let mean = 0.5 * (a + c);
        let dev = (0.25 * (a - c) * (a - c) + 0.25 * b * b).sqrt();
        let (l_small, l_big) = (mean - dev, mean + dev);
        if !(l_small > 0.0) {
            return None;
        }
        let major = (-f0 / l_small).sqrt();
        let minor = (-f0 / l_big).sqrt();
        // 0.5 * atan2(B, A - C) is the direction of the larger eigenvalue (minor axis)
        let orientation = if dev < 1e-15 * mean.abs() { 0.0 } else { 0.5 * b.atan2(a - c) + PI / 2.0 };
        let e = EllipseParams::new(Point2::new(xc, yc), major, minor, orientation);
        e.is_valid().then_some(e)
    }
}

/// Ellipse-specific direct least-squares fit (constraint `4AC - B^2 = 1`),
/// solved in the numerically stable reduced 3x3 form on centred, scaled
/// coordinates.
pub fn fit_ellipse_direct(points: &[Point2]) -> Result<EllipseParams> {
    if points.len() < 5 {
        return Err(Error::DegenerateFit(format!("need 5 points, got {}", points.len())));
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Point2::default(), |acc, &p| acc + p) * (1.0 / n);
    let spread = points.iter().map(|&p| p.distance(mean)).sum::<f64>() / n;
    if !(spread > 1e-12) {
        return Err(Error::DegenerateFit("points coincide".into()));
    }
    let scale = 1.0 / spread;

    let mut s1 = Matrix3::<f64>::zeros();
    let mut s2 = Matrix3::<f64>::zeros();
    let mut s3 = Matrix3::<f64>::zeros();
    for &p in points {
        let q = (p - mean) * scale;
        let d1 = Vector3::new(q.x * q.x, q.x * q.y, q.y * q.y);
        let d2 = Vector3::new(q.x, q.y, 1.0);
        s1 += d1 * d1.transpose();
        s2 += d1 * d2.transpose();
        s3 += d2 * d2.transpose();
    }
    let s3_inv = s3
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::DegenerateFit("collinear points".into()))?;
    if s3.determinant().abs() < 1e-12 * s3.norm().powi(3) {
        return Err(Error::DegenerateFit("collinear points".into()));
    }
    let t = -s3_inv * s2.transpose();
    let m = s1 + s2 * t;
    // premultiply by inv(C1), C1 = [[0, 0, 2], [0, -1, 0], [2, 0, 0]]
    let reduced =
        Matrix3::from_rows(&[(m.row(2) * 0.5).into_owned(), (-m.row(1)).into_owned(), (m.row(0) * 0.5).into_owned()]);

    let eigenvalues =
        reduced.eigenvalues().ok_or_else(|| Error::DegenerateFit("complex spectrum in reduced system".into()))?;
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for &lambda in eigenvalues.iter() {
        let Some(v) = null_vector(&(reduced - Matrix3::identity() * lambda)) else { continue };
        let cond = 4.0 * v[0] * v[2] - v[1] * v[1];
        if cond > 0.0 && best.is_none_or(|(c, _)| cond > c) {
            best = Some((cond, v));
        }
    }
    let (_, a1) = best.ok_or_else(|| Error::DegenerateFit("no elliptical solution".into()))?;
    let a2 = t * a1;
    let conic = Conic([a1[0], a1[1], a1[2], a2[0], a2[1], a2[2]]);
    let local = conic.to_ellipse().ok_or_else(|| Error::DegenerateFit("conic is not an ellipse".into()))?;
    Ok(EllipseParams {
        centre: local.centre * spread + mean,
        a: local.a * spread,
        b: local.b * spread,
        orientation: local.orientation,
    })
}

/// Unit vector spanning the (numerical) null space of a rank-2 3x3 matrix.
fn null_vector(m: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    let candidates = [rows[0].cross(&rows[1]), rows[0].cross(&rows[2]), rows[1].cross(&rows[2])];
    let v = candidates.iter().max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))?;
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| v / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn sample(e: &EllipseParams, n: usize) -> Vec<Point2> {
        (0..n).map(|i| e.point_at(2.0 * PI * i as f64 / n as f64)).collect()
    }

    fn angle_diff(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(PI);
        d.min(PI - d)
    }

    #[test]
    fn recovers_exact_ellipse() {
        let truth = EllipseParams::new(Point2::new(10.0, 12.0), 5.0, 3.0, 30f64.to_radians());
        let fit = fit_ellipse_direct(&sample(&truth, 12)).unwrap();
        assert!(fit.centre.distance(truth.centre) < 1e-6);
        assert!((fit.a - 5.0).abs() < 1e-6 && (fit.b - 3.0).abs() < 1e-6);
        assert!(angle_diff(fit.orientation, truth.orientation) < 1e-6);
    }

    #[test]
    fn translation_equivariance() {
        let truth = EllipseParams::new(Point2::new(40.0, 25.0), 9.0, 6.0, 1.1);
        // slightly perturbed so the fit is not exact
        let pts: Vec<Point2> = sample(&truth, 20)
            .into_iter()
            .enumerate()
            .map(|(i, p)| p + Point2::new(0.05 * ((i * 7) % 5) as f64, -0.04 * ((i * 3) % 4) as f64))
            .collect();
        let moved: Vec<Point2> = pts.iter().map(|&p| p + Point2::new(7.0, -4.0)).collect();
        let a = fit_ellipse_direct(&pts).unwrap();
        let b = fit_ellipse_direct(&moved).unwrap();
        assert!((b.centre - a.centre - Point2::new(7.0, -4.0)).norm() < 1e-9);
        assert!((a.a - b.a).abs() < 1e-9 && (a.b - b.b).abs() < 1e-9);
    }

    #[test]
    fn collinear_points_fail() {
        let pts: Vec<Point2> = (0..5).map(|i| Point2::new(i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!(matches!(fit_ellipse_direct(&pts), Err(Error::DegenerateFit(_))));
        assert!(fit_ellipse_direct(&pts[..4]).is_err());
    }

    #[test]
    fn circle_orientation_is_zero() {
        let c = EllipseParams::circle(Point2::new(3.0, 4.0), 7.0);
        let fit = fit_ellipse_direct(&sample(&c, 16)).unwrap();
        assert!((fit.a - 7.0).abs() < 1e-9 && (fit.b - 7.0).abs() < 1e-9);
    }

    #[test]
    fn distance_and_normal() {
        let e = EllipseParams::new(Point2::new(0.0, 0.0), 4.0, 2.0, 0.0);
        let (d, n) = e.approx_distance(Point2::new(5.0, 0.0));
        assert!((d - 1.0).abs() < 1e-12 && (n.x - 1.0).abs() < 1e-12);
        let (d, n) = e.approx_distance(Point2::new(0.0, -1.5));
        assert!((d + 0.5).abs() < 1e-12 && (n.y + 1.0).abs() < 1e-12);
    }

    #[test]
    fn axis_swap_normalizes() {
        let e = EllipseParams::new(Point2::default(), 2.0, 5.0, 0.0);
        assert_eq!((e.a, e.b), (5.0, 2.0));
        assert!((e.orientation - PI / 2.0).abs() < 1e-15);
    }
}
