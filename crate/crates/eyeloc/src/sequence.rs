//! Tracked processing of ordered face-frame sequences.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use eyeloc_core::closure::{eye_state, EyeState, HogConfig, SvmModel};
use eyeloc_core::gaze::detect_inner_corner_excluding;
use eyeloc_core::pipeline::{crop_rect, EyeDetection, Locator};
use eyeloc_core::track::{track_template, CornerTemplate, IrisTracker, TrackOutcome};
use eyeloc_core::{Error, GrayImage, Point2, Rect, Side};

use crate::config::{RunConfig, TrackerConfig};
use crate::error::{CliError, Result};
use crate::formats::f6;
use crate::synthio::SequenceRow;

/// Reads a sequence manifest; frames must be numbered `0..n` in order.
pub fn load_sequence(path: &Path) -> Result<(PathBuf, Vec<SequenceRow>)> {
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::parse(path, e.to_string()))?;
    let rows: Vec<SequenceRow> =
        rd.deserialize().map(|r| r.map_err(|e| CliError::parse(path, e.to_string()))).collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(CliError::parse(path, "sequence has no frames"));
    }
    for (k, r) in rows.iter().enumerate() {
        if r.frame != k {
            return Err(CliError::parse(
                path,
                format!("expected frame {k}, found frame {} (unordered or missing)", r.frame),
            ));
        }
    }
    Ok((base, rows))
}

/// Corner search ignores this multiple of the iris radius around the iris.
const IRIS_EXCLUSION: f64 = 1.6;

/// Per-eye outputs of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeFrame {
    pub raw: Option<Point2>,
    pub accepted: bool,
    pub kf: Option<Point2>,
    pub state: Option<EyeState>,
    pub corner: Option<Point2>,
}

pub struct SequenceTracker {
    locator: Locator,
    cfg: TrackerConfig,
    iris: [IrisTracker; 2],
    corners: [Option<CornerTemplate>; 2],
    closure: Option<(SvmModel, HogConfig)>,
}

impl SequenceTracker {
    pub fn new(cfg: &RunConfig, closure: Option<(SvmModel, HogConfig)>) -> Result<Self> {
        let kf = cfg.tracker.kalman;
        Ok(Self {
            locator: Locator::new(cfg.pipeline)?,
            cfg: cfg.tracker.clone(),
            iris: [IrisTracker::new(kf), IrisTracker::new(kf)],
            corners: [None, None],
            closure,
        })
    }

    fn state_of(&self, frame: &GrayImage, d: &EyeDetection) -> Result<Option<EyeState>> {
        let Some((m, hog)) = &self.closure else {
            return Ok(None);
        };
        let (roi, _) = crop_rect(frame, &d.roi)?;
        Ok(Some(eye_state(&roi, m, hog)?))
    }

    fn corner(
        &mut self,
        frame: &GrayImage,
        d: &EyeDetection,
        k: usize,
        state: Option<EyeState>,
    ) -> Result<Option<Point2>> {
        if state == Some(EyeState::Closed) {
            return Ok(self.corners[k].as_ref().map(|t| t.last_position));
        }
        if let Some(t) = &mut self.corners[k] {
            if let TrackOutcome::Found { position, .. } = track_template(frame, t) {
                t.last_position = position;
                return Ok(Some(position));
            }
        }
        let (roi, (ox, oy)) = crop_rect(frame, &d.roi)?;
        let off = Point2::new(ox as f64, oy as f64);
        let exclude = d.fit.as_ref().map(|f| (f.ellipse.centre - off, IRIS_EXCLUSION * f.ellipse.a));
        let Some(p) = detect_inner_corner_excluding(&roi, d.side, &self.cfg.corner, exclude)? else {
            self.corners[k] = None;
            return Ok(None);
        };
        let p = p + off;
        self.corners[k] = match CornerTemplate::capture(frame, p, self.cfg.patch_side) {
            Ok(mut t) => {
                t.ncc_threshold = self.cfg.ncc_threshold;
                t.search_radius = self.cfg.search_radius;
                Some(t)
            }
            Err(Error::Bounds(_)) => None,
            Err(e) => return Err(e.into()),
        };
        Ok(Some(p))
    }

    pub fn step(&mut self, frame: &GrayImage, face: &Rect) -> Result<[EyeFrame; 2]> {
        let dets = self.locator.locate_eyes(frame, face)?;
        let mut out = [EyeFrame { raw: None, accepted: false, kf: None, state: None, corner: None }; 2];
        for (k, d) in dets.iter().enumerate() {
            let state = self.state_of(frame, d)?;
            let kf = match self.iris[k].step(d.fit.as_ref(), state.unwrap_or(EyeState::Open)) {
                Ok(p) => Some(p),
                Err(Error::Uninitialized) => None,
                Err(e) => return Err(e.into()),
            };
            out[k] =
                EyeFrame { raw: d.centre, accepted: d.accepted(), kf, state, corner: self.corner(frame, d, k, state)? };
        }
        Ok(out)
    }
}

fn face_of(r: &SequenceRow) -> Option<Rect> {
    Some(Rect::new(r.face_x?, r.face_y?, r.face_w?, r.face_h?))
}

fn truth_of(r: &SequenceRow) -> Option<[Point2; 2]> {
    Some([Point2::new(r.lx?, r.ly?), Point2::new(r.rx?, r.ry?)])
}

/// Result of a tracked run: per-frame CSV plus error summaries when truth
/// is available.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackReport {
    pub csv: String,
    pub raw_rmse: Option<f64>,
    pub kf_rmse: Option<f64>,
    pub frames: usize,
}

fn rmse(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| (v.iter().map(|e| e * e).sum::<f64>() / v.len() as f64).sqrt())
}

pub fn run_sequence(
    base: &Path,
    rows: &[SequenceRow],
    cfg: &RunConfig,
    closure: Option<(SvmModel, HogConfig)>,
    load: impl Fn(&Path) -> Result<GrayImage>,
) -> Result<TrackReport> {
    let mut tracker = SequenceTracker::new(cfg, closure)?;
    let mut face = None;
    let mut csv = String::from("frame,eye,raw_x,raw_y,accepted,kf_x,kf_y,state,corner_x,corner_y\n");
    let (mut raw_err, mut kf_err) = (Vec::new(), Vec::new());
    for r in rows {
        let img = load(&base.join(&r.filename))?;
        let truth = truth_of(r);
        face = face_of(r).or(face);
        if face.is_none() {
            if let Some([l, rt]) = truth {
                face = Some(cfg.pipeline.layout.face_box_from_eyes(l, rt)?);
            }
        }
        let fb = face.ok_or_else(|| CliError::Config(format!("frame {}: no face box and no eye truth", r.frame)))?;
        let eyes = tracker.step(&img, &fb)?;
        for (k, e) in eyes.iter().enumerate() {
            let opt = |v: Option<f64>| v.map(f6).unwrap_or_default();
            let state = match e.state {
                Some(EyeState::Open) => "open",
                Some(EyeState::Closed) => "closed",
                None => "",
            };
            let side = if k == 0 { Side::Left } else { Side::Right };
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{state},{},{}",
                r.frame,
                if side == Side::Left { "L" } else { "R" },
                opt(e.raw.map(|p| p.x)),
                opt(e.raw.map(|p| p.y)),
                e.accepted,
                opt(e.kf.map(|p| p.x)),
                opt(e.kf.map(|p| p.y)),
                opt(e.corner.map(|p| p.x)),
                opt(e.corner.map(|p| p.y)),
            );
            if let (Some(t), false) = (truth, r.closed.unwrap_or(false)) {
                if let (Some(raw), true) = (e.raw, e.accepted) {
                    raw_err.push(raw.distance(t[k]));
                }
                if let Some(p) = e.kf {
                    kf_err.push(p.distance(t[k]));
                }
            }
        }
    }
    Ok(TrackReport { csv, raw_rmse: rmse(&raw_err), kf_rmse: rmse(&kf_err), frames: rows.len() })
}
