//! Benchmark evaluation and resolution sweeps.

use eyeloc_core::imgcore::{downscale, scale_coordinate};
use eyeloc_core::metrics::{accuracy_curve, wec_aec_bec, AccuracyCurve, ErrorRecord, Metric};
use eyeloc_core::pipeline::{EyeDetection, Locator, PipelineConfig};
use eyeloc_core::{Error, GrayImage, Point2, Rect};

use crate::dataset::DatasetItem;
use crate::error::Result;
use crate::formats::SweepRow;
use crate::imageio::load_gray;

/// Errors that mean the image is too small for the detector at this scale.
pub fn is_sub_minimum(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Dimension(_) | Error::Argument(_))
}

fn scale_point(p: Point2, s: f64) -> Point2 {
    Point2::new(scale_coordinate(p.x, s), scale_coordinate(p.y, s))
}

fn scale_rect(r: Rect, s: f64) -> Rect {
    let o = scale_point(Point2::new(r.x, r.y), s);
    Rect::new(o.x, o.y, r.width * s, r.height * s)
}

/// Face box of an item: its own, or one derived from the ground-truth eyes.
pub fn face_box(item: &DatasetItem, cfg: &PipelineConfig) -> Result<Rect> {
    match item.face_box {
        Some(f) => Ok(f),
        None => Ok(cfg.layout.face_box_from_eyes(item.gt_left, item.gt_right)?),
    }
}

/// Detections and error record of one image at `scale`. Images too small
/// for the detector yield the core error unchanged.
pub fn evaluate_image(
    loc: &mut Locator,
    img: &GrayImage,
    item: &DatasetItem,
    scale: f64,
) -> std::result::Result<([EyeDetection; 2], Option<ErrorRecord>), Error> {
    let face = match item.face_box {
        Some(f) => f,
        None => loc.config.layout.face_box_from_eyes(item.gt_left, item.gt_right)?,
    };
    let (img, face, gl, gr) = if scale == 1.0 {
        (img.clone(), face, item.gt_left, item.gt_right)
    } else {
        (
            downscale(img, scale)?,
            scale_rect(face, scale),
            scale_point(item.gt_left, scale),
            scale_point(item.gt_right, scale),
        )
    };
    let d = loc.locate_eyes(&img, &face)?;
    let rec = match (d[0].centre, d[1].centre) {
        (Some(l), Some(r)) => Some(wec_aec_bec(l, r, gl, gr)?),
        _ => None,
    };
    Ok((d, rec))
}

/// Per-item records at one scale, or `None` when some image is below the
/// detector's minimum size.
pub fn evaluate_items(
    items: &[DatasetItem],
    cfg: &PipelineConfig,
    scale: f64,
) -> Result<Option<Vec<(String, Option<ErrorRecord>)>>> {
    let mut loc = Locator::new(*cfg)?;
    let mut out = Vec::with_capacity(items.len());
    for it in items {
        let img = load_gray(&it.image_path)?;
        it.check_bounds(img.width(), img.height())?;
        match evaluate_image(&mut loc, &img, it, scale) {
            Ok((_, rec)) => out.push((it.file_name(), rec)),
            Err(e) if is_sub_minimum(&e) => {
                log::warn!("{} at scale {scale}: {e}", it.image_path.display());
                return Ok(None);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Some(out))
}

pub fn curves(records: &[Option<ErrorRecord>], thresholds: &[f64]) -> Result<Vec<AccuracyCurve>> {
    Ok(Metric::ALL.iter().map(|m| accuracy_curve(records, thresholds, *m)).collect::<eyeloc_core::Result<_>>()?)
}

/// WEC/AEC/BEC accuracy at 0.05 for each scale.
pub fn resolution_sweep(items: &[DatasetItem], scales: &[f64], cfg: &PipelineConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &s in scales {
        let row = match evaluate_items(items, cfg, s)? {
            Some(recs) => {
                let recs: Vec<_> = recs.into_iter().map(|(_, r)| r).collect();
                let c = curves(&recs, &[0.05])?;
                Some([c[0].fraction_detected[0], c[1].fraction_detected[0], c[2].fraction_detected[0]])
            }
            None => None,
        };
        rows.push((s, row));
    }
    Ok(rows)
}
