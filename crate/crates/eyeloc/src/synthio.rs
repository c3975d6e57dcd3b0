//! Synthetic corpora written to disk, and the synthetic gaze mapping.

use std::fs;
use std::path::Path;

use eyeloc_core::closure::EyeState;
use eyeloc_core::gaze::ScreenGeometry;
use eyeloc_core::pipeline::{crop_rect, EyeLayout};
use eyeloc_core::seed::{derive_seed, rng};
use eyeloc_core::synth::{corpus_specs, random_face_spec, render_face, CorpusKind, FaceSpec, FaceTruth};
use eyeloc_core::{GrayImage, Point2, Side};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{write_custom, DatasetItem};
use crate::error::{CliError, Result};
use crate::formats::{CalibrationRow, EyeTag};
use crate::imageio::save_pgm;

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn truth_item(path: &Path, t: &FaceTruth) -> DatasetItem {
    let mut it = DatasetItem::new(path.to_path_buf(), t.eyes[0].iris_centre, t.eyes[1].iris_centre);
    it.gt_corners = Some([t.eyes[0].inner_corner, t.eyes[1].inner_corner]);
    it.face_box = Some(t.face_box);
    it
}

/// Renders `n` faces of `kind` into `dir` with a `manifest.csv`.
pub fn write_face_corpus(
    dir: &Path,
    kind: CorpusKind,
    n: usize,
    seed: u64,
    layout: &EyeLayout,
) -> Result<Vec<DatasetItem>> {
    mkdir(dir)?;
    let mut items = Vec::with_capacity(n);
    for (i, spec) in corpus_specs(kind, n, seed, layout).iter().enumerate() {
        let (img, truth) = render_face(spec)?;
        let path = dir.join(format!("{}_{i:04}.pgm", kind.name()));
        save_pgm(&path, &img)?;
        items.push(truth_item(&path, &truth));
    }
    write_custom(&dir.join("manifest.csv"), &items)?;
    Ok(items)
}

/// Both eye ROIs of a rendered face, image-left first.
pub fn eye_rois(img: &GrayImage, truth: &FaceTruth, layout: &EyeLayout) -> Result<[GrayImage; 2]> {
    let roi = |s: Side| crop_rect(img, &layout.roi(&truth.face_box, s)).map(|(g, _)| g);
    Ok([roi(Side::Left)?, roi(Side::Right)?])
}

/// Labelled eye ROIs: open eyes from `n_open` clean and hard faces (half
/// each), closed eyes from `n_closed` closed faces.
pub fn closure_samples(
    seed: u64,
    layout: &EyeLayout,
    n_open: usize,
    n_closed: usize,
) -> Result<Vec<(GrayImage, EyeState)>> {
    let mut specs: Vec<(FaceSpec, EyeState)> = Vec::new();
    let half = n_open / 2;
    let cseed = derive_seed(seed, "closure");
    specs
        .extend(corpus_specs(CorpusKind::Clean, n_open - half, cseed, layout).into_iter().map(|s| (s, EyeState::Open)));
    specs.extend(corpus_specs(CorpusKind::Hard, half, cseed, layout).into_iter().map(|s| (s, EyeState::Open)));
    specs.extend(corpus_specs(CorpusKind::Closed, n_closed, cseed, layout).into_iter().map(|s| (s, EyeState::Closed)));
    let mut out = Vec::with_capacity(2 * specs.len());
    for (spec, state) in &specs {
        let (img, truth) = render_face(spec)?;
        for roi in eye_rois(&img, &truth, layout)? {
            out.push((roi, *state));
        }
    }
    Ok(out)
}

/// Writes `open/` and `closed/` eye crops under `dir`.
pub fn write_closure_corpus(dir: &Path, samples: &[(GrayImage, EyeState)]) -> Result<()> {
    for sub in ["open", "closed"] {
        mkdir(&dir.join(sub))?;
    }
    for (i, (img, state)) in samples.iter().enumerate() {
        let sub = if *state == EyeState::Open { "open" } else { "closed" };
        save_pgm(&dir.join(sub).join(format!("eye_{i:04}.pgm")), img)?;
    }
    Ok(())
}

/// Face frames whose irises drift by `velocity` per frame (centred on the
/// rest position), closed at the `blinks` indices.
pub fn face_sequence(seed: u64, layout: &EyeLayout, n: usize, velocity: Point2, blinks: &[usize]) -> Vec<FaceSpec> {
    let base = random_face_spec(CorpusKind::Clean, layout, derive_seed(seed, "sequence"));
    let mid = (n as f64 - 1.0) / 2.0;
    (0..n)
        .map(|k| {
            let mut s = base;
            let d = velocity * (k as f64 - mid);
            for e in &mut s.eyes {
                e.iris = e.iris.translated(d);
                if blinks.contains(&k) {
                    e.occlusion = 1.0;
                }
            }
            s.seed = derive_seed(base.seed, &format!("frame-{k}"));
            s
        })
        .collect()
}

/// Sequence manifest row: frame index, file, optional truth and face box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRow {
    pub frame: usize,
    pub filename: String,
    #[serde(default)]
    pub lx: Option<f64>,
    #[serde(default)]
    pub ly: Option<f64>,
    #[serde(default)]
    pub rx: Option<f64>,
    #[serde(default)]
    pub ry: Option<f64>,
    #[serde(default)]
    pub closed: Option<bool>,
    #[serde(default)]
    pub face_x: Option<f64>,
    #[serde(default)]
    pub face_y: Option<f64>,
    #[serde(default)]
    pub face_w: Option<f64>,
    #[serde(default)]
    pub face_h: Option<f64>,
}

pub fn write_sequence(dir: &Path, specs: &[FaceSpec]) -> Result<Vec<SequenceRow>> {
    mkdir(dir)?;
    let mut rows = Vec::with_capacity(specs.len());
    for (k, spec) in specs.iter().enumerate() {
        let (img, t) = render_face(spec)?;
        let filename = format!("frame_{k:04}.pgm");
        save_pgm(&dir.join(&filename), &img)?;
        let (l, r) = (t.eyes[0].iris_centre, t.eyes[1].iris_centre);
        rows.push(SequenceRow {
            frame: k,
            filename,
            lx: Some(l.x),
            ly: Some(l.y),
            rx: Some(r.x),
            ry: Some(r.y),
            closed: Some(t.eyes[0].closed),
            face_x: Some(t.face_box.x),
            face_y: Some(t.face_box.y),
            face_w: Some(t.face_box.width),
            face_h: Some(t.face_box.height),
        });
    }
    let path = dir.join("sequence.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::parse(&path, e.to_string()))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(rows)
}

/// Screen position as a function of the EC-IC vector, for synthetic
/// calibration data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticMapping {
    /// Inside the span of the second-order polynomial basis.
    Quadratic,
    /// Saturating, outside that span.
    Curved,
}

/// EC-IC vectors stay within about 15 px of `EC_IC_REST` for on-screen targets.
pub const EC_IC_REST: Point2 = Point2::new(30.0, 2.0);

impl SyntheticMapping {
    pub fn screen_of(self, v: Point2, g: &ScreenGeometry) -> Point2 {
        let (u, w) = (v.x - EC_IC_REST.x, v.y - EC_IC_REST.y);
        let c = g.centre();
        match self {
            SyntheticMapping::Quadratic => {
                Point2::new(c.x + 70.0 * u + 1.2 * u * w + 0.8 * u * u, c.y + 45.0 * w + 0.6 * w * w + 0.4 * u * u)
            }
            SyntheticMapping::Curved => Point2::new(
                c.x + 0.55 * g.width_px * (u / 10.0).tanh() + 20.0 * (w / 6.0).sin(),
                c.y + 0.55 * g.height_px * (w / 6.0).tanh() + 15.0 * (u / 10.0).sin(),
            ),
        }
    }

    /// EC-IC vector mapping to `target` (Newton iterations from the rest point).
    pub fn ecic_of(self, target: Point2, g: &ScreenGeometry) -> Result<Point2> {
        let mut v = EC_IC_REST;
        for _ in 0..100 {
            let f = self.screen_of(v, g) - target;
            if f.norm() < 1e-10 {
                return Ok(v);
            }
            let h = 1e-6;
            let fx =
                (self.screen_of(v + Point2::new(h, 0.0), g) - self.screen_of(v - Point2::new(h, 0.0), g)) * (0.5 / h);
            let fy =
                (self.screen_of(v + Point2::new(0.0, h), g) - self.screen_of(v - Point2::new(0.0, h), g)) * (0.5 / h);
            let det = fx.x * fy.y - fy.x * fx.y;
            if det.abs() < 1e-12 {
                break;
            }
            let dx = (fy.y * f.x - fy.x * f.y) / det;
            let dy = (-fx.y * f.x + fx.x * f.y) / det;
            let step = Point2::new(dx, dy);
            let step = if step.norm() > 2.0 { step * (2.0 / step.norm()) } else { step };
            v = v - step;
        }
        Err(CliError::Other(format!("no EC-IC vector maps to ({:.1}, {:.1})", target.x, target.y)))
    }
}

/// Calibration rows: `per_target` frames per target, both eyes, with
/// Gaussian EC-IC noise of `noise` px. Both eyes share the mapping.
pub fn synthetic_calibration(
    targets: &[Point2],
    mapping: SyntheticMapping,
    g: &ScreenGeometry,
    per_target: usize,
    noise: f64,
    seed: u64,
) -> Result<Vec<CalibrationRow>> {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut frame = 0;
    for t in targets {
        let v = mapping.ecic_of(*t, g)?;
        for _ in 0..per_target {
            for eye in [EyeTag::L, EyeTag::R] {
                let nx: f64 = r.sample(StandardNormal);
                let ny: f64 = r.sample(StandardNormal);
                rows.push(CalibrationRow {
                    target_x: t.x,
                    target_y: t.y,
                    eye,
                    ecic_x: v.x + noise * nx,
                    ecic_y: v.y + noise * ny,
                    frame_index: frame,
                });
            }
            frame += 1;
        }
    }
    Ok(rows)
}

/// Uniform random screen targets inside the `margin` inset.
pub fn random_targets(n: usize, g: &ScreenGeometry, margin: f64, seed: u64) -> Vec<Point2> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            Point2::new(
                g.width_px * r.random_range(margin..1.0 - margin),
                g.height_px * r.random_range(margin..1.0 - margin),
            )
        })
        .collect()
}
