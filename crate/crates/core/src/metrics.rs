//! Inter-ocular-normalized eye localization errors and accuracy curves.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Point2, Result};

/// Thresholds reported by default: 0.05, 0.10, 0.15, 0.20.
pub const DEFAULT_THRESHOLDS: [f64; 4] = [0.05, 0.10, 0.15, 0.20];

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorRecord {
    pub d_l: f64,
    pub d_r: f64,
    /// Ground-truth inter-ocular distance.
    pub w: f64,
    pub e_wec: f64,
    pub e_aec: f64,
    pub e_bec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Metric {
    Wec,
    Aec,
    Bec,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Wec, Metric::Aec, Metric::Bec];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Wec => "wec",
            Metric::Aec => "aec",
            Metric::Bec => "bec",
        }
    }
}

impl ErrorRecord {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Wec => self.e_wec,
            Metric::Aec => self.e_aec,
            Metric::Bec => self.e_bec,
        }
    }
}

pub fn wec_aec_bec(det_left: Point2, det_right: Point2, gt_left: Point2, gt_right: Point2) -> Result<ErrorRecord> {
    let w = gt_left.distance(gt_right);
    if !(w > 0.0) {
        return Err(Error::Metric(format!("ground-truth eyes coincide at ({}, {})", gt_left.x, gt_left.y)));
    }
    let d_l = det_left.distance(gt_left);
    let d_r = det_right.distance(gt_right);
    Ok(ErrorRecord { d_l, d_r, w, e_wec: d_l.max(d_r) / w, e_aec: (d_l + d_r) / (2.0 * w), e_bec: d_l.min(d_r) / w })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AccuracyCurve {
    pub metric: Metric,
    pub thresholds: Vec<f64>,
    pub fraction_detected: Vec<f64>,
}

impl AccuracyCurve {
    /// Fraction at threshold `t`, if `t` is one of the curve's thresholds.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.thresholds.iter().position(|&x| (x - t).abs() < 1e-12).map(|i| self.fraction_detected[i])
    }
}

/// Fraction of records with `metric <= threshold` for each threshold.
/// `None` entries (failed detections) count as misses.
pub fn accuracy_curve(records: &[Option<ErrorRecord>], thresholds: &[f64], metric: Metric) -> Result<AccuracyCurve> {
    if records.is_empty() {
        return Err(Error::Metric("no records".into()));
    }
    let n = records.len() as f64;
    let fraction_detected = thresholds
        .iter()
        .map(|&t| records.iter().filter(|r| r.is_some_and(|r| r.get(metric) <= t)).count() as f64 / n)
        .collect();
    Ok(AccuracyCurve { metric, thresholds: thresholds.to_vec(), fraction_detected })
}

/// Curves for WEC, AEC and BEC over the default thresholds.
pub fn default_curves(records: &[Option<ErrorRecord>]) -> Result<Vec<AccuracyCurve>> {
    Metric::ALL.iter().map(|&m| accuracy_curve(records, &DEFAULT_THRESHOLDS, m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn unit_values() {
        let gl = Point2::new(0.0, 0.0);
        let gr = Point2::new(100.0, 0.0);
        let r = wec_aec_bec(Point2::new(3.0, 0.0), Point2::new(100.0, 4.0), gl, gr).unwrap();
        assert!((r.e_wec - 0.04).abs() < 1e-12);
        assert!((r.e_aec - 0.035).abs() < 1e-12);
        assert!((r.e_bec - 0.03).abs() < 1e-12);
        let p = wec_aec_bec(gl, gr, gl, gr).unwrap();
        assert_eq!((p.e_wec, p.e_aec, p.e_bec), (0.0, 0.0, 0.0));
        assert!(matches!(wec_aec_bec(gl, gl, gl, gl), Err(Error::Metric(_))));
    }

    #[test]
    fn curve_basics() {
        let rec = ErrorRecord { d_l: 3.0, d_r: 3.0, w: 100.0, e_wec: 0.03, e_aec: 0.03, e_bec: 0.03 };
        let c = accuracy_curve(&[Some(rec); 4], &DEFAULT_THRESHOLDS, Metric::Wec).unwrap();
        assert_eq!(c.fraction_detected, vec![1.0; 4]);
        let c = accuracy_curve(&[Some(rec), None], &[0.01, 0.05], Metric::Aec).unwrap();
        assert_eq!(c.fraction_detected, vec![0.0, 0.5]);
        assert_eq!(c.at(0.05), Some(0.5));
        assert!(accuracy_curve(&[], &[0.1], Metric::Bec).is_err());
    }
}
