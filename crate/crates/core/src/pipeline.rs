//! Per-frame eye localization: eye ROI layout, coarse detection and refinement.

use alloc::format;
use alloc::vec::Vec;

use crate::coarse::{
    coarse_ic_with_floor, radius_range_from_face, AnnulusParams, FaceRatios, KernelSet, PeakCandidate,
};
use crate::imgcore::ConvMode;
use crate::refine::{refine_ic, FitResult, RefineConfig};
use crate::{Error, GrayImage, Point2, Rect, Result, Side};

/// Eye regions as fractions of the face box.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct EyeLayout {
    pub left_x: (f64, f64),
    pub right_x: (f64, f64),
    pub y: (f64, f64),
}

impl Default for EyeLayout {
    fn default() -> Self {
        Self { left_x: (0.12, 0.45), right_x: (0.55, 0.88), y: (0.22, 0.52) }
    }
}

impl EyeLayout {
    pub fn validate(&self) -> Result<()> {
        let ok = |(a, b): (f64, f64)| (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && a < b;
        if ok(self.left_x) && ok(self.right_x) && ok(self.y) {
            Ok(())
        } else {
            Err(Error::Config(format!("eye layout fractions must be increasing within [0, 1]: {self:?}")))
        }
    }

    /// Eye ROI inside `face` (not clipped to any image).
    pub fn roi(&self, face: &Rect, side: Side) -> Rect {
        let (x0, x1) = match side {
            Side::Left => self.left_x,
            Side::Right => self.right_x,
        };
        Rect::new(
            face.x + x0 * face.width,
            face.y + self.y.0 * face.height,
            (x1 - x0) * face.width,
            (self.y.1 - self.y.0) * face.height,
        )
    }

    /// ROI centre as fractions of the face box.
    pub fn centre_fraction(&self, side: Side) -> Point2 {
        let (x0, x1) = match side {
            Side::Left => self.left_x,
            Side::Right => self.right_x,
        };
        Point2::new(0.5 * (x0 + x1), 0.5 * (self.y.0 + self.y.1))
    }

    /// Square face box placing the two eye centres on the ROI centres.
    pub fn face_box_from_eyes(&self, left: Point2, right: Point2) -> Result<Rect> {
        let (l, r) = if left.x <= right.x { (left, right) } else { (right, left) };
        let span = self.centre_fraction(Side::Right).x - self.centre_fraction(Side::Left).x;
        let d = l.distance(r);
        if !(d > 0.0 && span > 0.0) {
            return Err(Error::Argument("eye positions coincide".into()));
        }
        let w = d / span;
        let mid = (l + r) * 0.5;
        let cl = self.centre_fraction(Side::Left);
        let cr = self.centre_fraction(Side::Right);
        let fx = 0.5 * (cl.x + cr.x);
        Ok(Rect::new(mid.x - fx * w, mid.y - cl.y * w, w, w))
    }
}

/// Integer crop of `r` clipped to the image; returns the crop and its offset.
pub fn crop_rect(img: &GrayImage, r: &Rect) -> Result<(GrayImage, (usize, usize))> {
    let x0 = r.x.round().max(0.0) as usize;
    let y0 = r.y.round().max(0.0) as usize;
    let x1 = ((r.x + r.width).round() as isize).min(img.width() as isize).max(0) as usize;
    let y1 = ((r.y + r.height).round() as isize).min(img.height() as isize).max(0) as usize;
    if x1 <= x0 || y1 <= y0 {
        return Err(Error::Bounds(format!("region {r:?} outside the {}x{} image", img.width(), img.height())));
    }
    Ok((img.crop(x0, y0, x1 - x0, y1 - y0)?, (x0, y0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PipelineConfig {
    pub layout: EyeLayout,
    pub face_ratios: FaceRatios,
    pub beta: f64,
    pub lambda: f64,
    pub candidates: usize,
    /// Candidates below this fraction of the best CO value are not compared on PSR.
    pub candidate_floor: f64,
    pub conv_mode: ConvMode,
    pub refine: RefineConfig,
    /// When false, the coarse centre is reported without refinement.
    pub use_refinement: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            layout: EyeLayout::default(),
            face_ratios: FaceRatios::default(),
            beta: 2.0,
            lambda: 0.95,
            candidates: crate::coarse::DEFAULT_CANDIDATES,
            candidate_floor: crate::coarse::DEFAULT_RELATIVE_FLOOR,
            conv_mode: ConvMode::Auto,
            refine: RefineConfig::default(),
            use_refinement: true,
        }
    }
}

impl PipelineConfig {
    pub fn annulus_for_face(&self, face_width: f64) -> Result<AnnulusParams> {
        let (r_min, r_max) = radius_range_from_face(face_width, self.face_ratios)?;
        AnnulusParams::new(r_min, r_max, self.beta, self.lambda)
    }
}

/// Localization result for one eye, in frame coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeDetection {
    pub side: Side,
    pub roi: Rect,
    pub coarse: Option<PeakCandidate>,
    pub fit: Option<FitResult>,
    /// Reported iris centre: refined when accepted, coarse otherwise.
    pub centre: Option<Point2>,
}

impl EyeDetection {
    pub fn accepted(&self) -> bool {
        self.fit.as_ref().is_some_and(|f| f.accepted)
    }
}

/// Kernel set cached by radius range, plus the pipeline settings.
#[derive(Debug, Clone)]
pub struct Locator {
    pub config: PipelineConfig,
    cache: Vec<KernelSet>,
}

impl Locator {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.layout.validate()?;
        Ok(Self { config, cache: Vec::new() })
    }

    fn kernels(&mut self, p: AnnulusParams) -> Result<&KernelSet> {
        if let Some(i) = self.cache.iter().position(|k| k.params == p) {
            return Ok(&self.cache[i]);
        }
        if self.cache.len() >= 8 {
            self.cache.remove(0);
        }
        self.cache.push(KernelSet::build(p)?);
        Ok(self.cache.last().unwrap())
    }

    /// Locates the iris centre inside `roi` (ROI-local coordinates) with
    /// radii derived from `face_width`.
    pub fn locate_in_roi(
        &mut self,
        roi: &GrayImage,
        face_width: f64,
    ) -> Result<(Option<PeakCandidate>, Option<FitResult>)> {
        let p = self.config.annulus_for_face(face_width)?;
        let c = self.config;
        let (candidates, floor, mode, refine_cfg, refine) =
            (c.candidates, c.candidate_floor, c.conv_mode, c.refine, c.use_refinement);
        let ks = self.kernels(p)?;
        if roi.width() < ks.c_rcc.size() || roi.height() < ks.c_rcc.size() {
            return Err(Error::Dimension(format!(
                "eye ROI {}x{} smaller than the {}-pixel kernel",
                roi.width(),
                roi.height(),
                ks.c_rcc.size()
            )));
        }
        let Some(peak) = coarse_ic_with_floor(roi, ks, candidates, floor, mode)? else { return Ok((None, None)) };
        if !refine {
            return Ok((Some(peak), None));
        }
        match refine_ic(roi, &peak, &p, &refine_cfg) {
            Ok(fit) => Ok((Some(peak), Some(fit))),
            Err(Error::Bounds(_)) => Ok((Some(peak), None)),
            Err(e) => Err(e),
        }
    }

    /// Locates one eye of the face in `frame`.
    pub fn locate_eye(&mut self, frame: &GrayImage, face: &Rect, side: Side) -> Result<EyeDetection> {
        let roi_rect = self.config.layout.roi(face, side);
        let (roi, (ox, oy)) = crop_rect(frame, &roi_rect)?;
        let (coarse, fit) = self.locate_in_roi(&roi, face.width)?;
        let off = Point2::new(ox as f64, oy as f64);
        let shift_peak = |mut p: PeakCandidate| {
            p.position = p.position + off;
            p
        };
        let fit = fit.map(|mut f| {
            f.ellipse = f.ellipse.translated(off);
            for q in &mut f.inliers {
                q.position = q.position + off;
            }
            f
        });
        let coarse = coarse.map(shift_peak);
        let centre = match (&fit, &coarse) {
            (Some(f), _) => Some(f.ellipse.centre),
            (None, Some(c)) => Some(c.position),
            _ => None,
        };
        Ok(EyeDetection { side, roi: roi_rect, coarse, fit, centre })
    }

    /// Both eyes, image-left first.
    pub fn locate_eyes(&mut self, frame: &GrayImage, face: &Rect) -> Result<[EyeDetection; 2]> {
        Ok([self.locate_eye(frame, face, Side::Left)?, self.locate_eye(frame, face, Side::Right)?])
    }
}
