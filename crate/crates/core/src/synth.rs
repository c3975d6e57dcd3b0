//! Deterministic synthetic eye and face renderer with exact ground truth.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::imgcore::gaussian_blur;
use crate::pipeline::EyeLayout;
use crate::refine::EllipseParams;
use crate::seed::{derive_seed, rng};
use crate::{Error, GrayImage, Point2, Rect, Result, Side, Surface};

const SUPERSAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Palette {
    pub skin: f64,
    pub sclera: f64,
    pub iris: f64,
    pub lash: f64,
}

impl Default for Palette {
    fn default() -> Self {
        Self { skin: 150.0, sclera: 220.0, iris: 50.0, lash: 35.0 }
    }
}

/// Shape of one eye. The opening is an almond of two parabolic arcs
/// between the corners; `upper_lid` / `lower_lid` are their apex heights.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EyeGeometry {
    pub side: Side,
    pub iris: EllipseParams,
    /// Image-left and image-right corners.
    pub corners: [Point2; 2],
    pub upper_lid: f64,
    pub lower_lid: f64,
    /// Fraction of the iris height hidden from the top by a flat lid;
    /// `>= 1` renders a closed eye.
    pub occlusion: f64,
}

impl EyeGeometry {
    pub fn closed(&self) -> bool {
        self.occlusion >= 1.0
    }

    /// The corner nearer the nose: the right-hand one for the image-left eye.
    pub fn inner_corner(&self) -> Point2 {
        match self.side {
            Side::Left => self.corners[1],
            Side::Right => self.corners[0],
        }
    }

    pub fn outer_corner(&self) -> Point2 {
        match self.side {
            Side::Left => self.corners[0],
            Side::Right => self.corners[1],
        }
    }

    pub fn translated(&self, d: Point2) -> Self {
        Self { iris: self.iris.translated(d), corners: [self.corners[0] + d, self.corners[1] + d], ..*self }
    }

    /// Mirror image about the vertical line `x = axis`, with the side flipped.
    pub fn mirrored(&self, axis: f64) -> Self {
        let m = |p: Point2| Point2::new(2.0 * axis - p.x, p.y);
        let iris = EllipseParams::new(
            m(self.iris.centre),
            self.iris.a,
            self.iris.b,
            core::f64::consts::PI - self.iris.orientation,
        );
        Self { side: self.side.flipped(), iris, corners: [m(self.corners[1]), m(self.corners[0])], ..*self }
    }

    fn validate(&self) -> Result<()> {
        let span = self.corners[0].distance(self.corners[1]);
        if !(self.iris.is_valid()
            && span > 0.0
            && self.upper_lid > 0.0
            && self.lower_lid > 0.0
            && self.occlusion >= 0.0)
        {
            return Err(Error::Spec(format!("invalid eye geometry {self:?}")));
        }
        Ok(())
    }

    /// Vertical half-extent of the iris ellipse.
    fn iris_half_height(&self) -> f64 {
        let (s, c) = self.iris.orientation.sin_cos();
        ((self.iris.a * s).powi(2) + (self.iris.b * c).powi(2)).sqrt()
    }

    fn lid_line(&self) -> f64 {
        let h = self.iris_half_height();
        self.iris.centre.y - h + self.occlusion.min(1.0) * 2.0 * h
    }

    /// Pixel box (x0, y0, x1, y1) covering everything the eye paints.
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let pad = self.upper_lid.max(self.lower_lid) + 3.0;
        let x0 = self.corners[0].x.min(self.corners[1].x) - 3.0;
        let x1 = self.corners[0].x.max(self.corners[1].x) + 3.0;
        let y0 = self.corners[0].y.min(self.corners[1].y) - pad;
        let y1 = self.corners[0].y.max(self.corners[1].y) + pad;
        (x0, y0, x1, y1)
    }

    /// Intensity at a sub-pixel point, or `None` where the eye paints nothing.
    fn shade(&self, p: Point2, pal: &Palette) -> Option<f64> {
        let c0 = self.corners[0];
        let axis = self.corners[1] - c0;
        let len = axis.norm();
        let e = axis * (1.0 / len);
        let n = Point2::new(-e.y, e.x);
        let q = p - c0;
        let s = q.dot(e) / len;
        if !(0.0..=1.0).contains(&s) {
            return None;
        }
        let u = 2.0 * s - 1.0;
        let bulge = 1.0 - u * u;
        let d = q.dot(n);
        if self.closed() {
            let seam = 0.3 * self.lower_lid * bulge;
            let half = (0.06 * self.upper_lid).max(0.9);
            return if (d - seam).abs() < half { Some(pal.lash) } else { None };
        }
        // depth below the visible upper boundary: the lid arc or the flat lid
        let below_arc = d + self.upper_lid * bulge;
        let below_lid = if self.occlusion > 0.0 { p.y - self.lid_line() } else { f64::INFINITY };
        let depth = below_arc.min(below_lid);
        if d >= self.lower_lid * bulge {
            return None;
        }
        if depth <= 0.0 {
            // lash line on the skin side of the upper boundary
            return (depth > -(0.12 * self.iris.a).max(1.5)).then_some(pal.lash);
        }
        let (dist, _) = self.iris.approx_distance(p);
        Some(if dist < 0.0 { pal.iris } else { pal.sclera })
    }

    fn paint(&self, canvas: &mut Surface, pal: &Palette) {
        let (bx0, by0, bx1, by1) = self.bounds();
        let (w, h) = (canvas.width() as f64, canvas.height() as f64);
        let x0 = bx0.floor().max(0.0) as usize;
        let y0 = by0.floor().max(0.0) as usize;
        let x1 = bx1.ceil().min(w - 1.0).max(0.0) as usize;
        let y1 = by1.ceil().min(h - 1.0).max(0.0) as usize;
        let k = SUPERSAMPLE as f64;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let base = canvas.get(x, y);
                let mut acc = 0.0;
                for j in 0..SUPERSAMPLE {
                    for i in 0..SUPERSAMPLE {
                        let p =
                            Point2::new(x as f64 - 0.5 + (i as f64 + 0.5) / k, y as f64 - 0.5 + (j as f64 + 0.5) / k);
                        acc += self.shade(p, pal).unwrap_or(base);
                    }
                }
                canvas.set(x, y, acc / (k * k));
            }
        }
    }

    fn truth(&self) -> EyeTruth {
        EyeTruth {
            side: self.side,
            iris_centre: self.iris.centre,
            ellipse: self.iris,
            inner_corner: self.inner_corner(),
            outer_corner: self.outer_corner(),
            closed: self.closed(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EyeTruth {
    pub side: Side,
    pub iris_centre: Point2,
    pub ellipse: EllipseParams,
    pub inner_corner: Point2,
    pub outer_corner: Point2,
    pub closed: bool,
}

/// A single eye on a flat skin background.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthEyeSpec {
    pub width: usize,
    pub height: usize,
    pub eye: EyeGeometry,
    pub palette: Palette,
    pub noise_sigma: f64,
    pub blur_sigma: f64,
    pub seed: u64,
}

fn check_palette(p: &Palette) -> Result<()> {
    if [p.skin, p.sclera, p.iris, p.lash].iter().all(|v| (0.0..=255.0).contains(v)) {
        Ok(())
    } else {
        Err(Error::Spec(format!("intensities must lie in [0, 255]: {p:?}")))
    }
}

fn check_iris_inside(e: &EyeGeometry, w: usize, h: usize) -> Result<()> {
    let c = e.iris.centre;
    if c.x - e.iris.a < 0.0
        || c.y - e.iris.a < 0.0
        || c.x + e.iris.a > w as f64 - 1.0
        || c.y + e.iris.a > h as f64 - 1.0
    {
        return Err(Error::Spec(format!("iris ellipse at ({:.1}, {:.1}) leaves the {w}x{h} image", c.x, c.y)));
    }
    Ok(())
}

/// Blur, add seeded Gaussian noise, clamp and quantize to integer levels.
fn finish(canvas: Surface, blur: f64, noise: f64, seed: u64) -> GrayImage {
    let mut s = gaussian_blur(&canvas, blur);
    if noise > 0.0 {
        let mut r = rng(seed);
        for v in s.data_mut() {
            let z: f64 = r.sample(StandardNormal);
            *v += noise * z;
        }
    }
    GrayImage::from_surface_clamped(s.map(|v| v.clamp(0.0, 255.0).round()))
}

pub fn render_eye(spec: &SynthEyeSpec) -> Result<(GrayImage, EyeTruth)> {
    spec.eye.validate()?;
    check_palette(&spec.palette)?;
    check_iris_inside(&spec.eye, spec.width, spec.height)?;
    let mut canvas = Surface::filled(spec.width, spec.height, spec.palette.skin);
    spec.eye.paint(&mut canvas, &spec.palette);
    Ok((finish(canvas, spec.blur_sigma, spec.noise_sigma, spec.seed), spec.eye.truth()))
}

/// Renders each spec of a trajectory; frames must share one size.
pub fn render_sequence(trajectory: &[SynthEyeSpec]) -> Result<Vec<(GrayImage, EyeTruth)>> {
    if let Some(first) = trajectory.first() {
        if trajectory.iter().any(|s| s.width != first.width || s.height != first.height) {
            return Err(Error::Spec("trajectory frames differ in size".into()));
        }
    }
    trajectory.iter().map(render_eye).collect()
}

/// `n` frames moving the whole eye by `velocity` per frame from `base`, with
/// closed frames at the `blinks` indices and per-frame noise seeds.
pub fn linear_trajectory(base: &SynthEyeSpec, velocity: Point2, n: usize, blinks: &[usize]) -> Vec<SynthEyeSpec> {
    (0..n)
        .map(|k| {
            let mut s = *base;
            s.eye = base.eye.translated(velocity * k as f64);
            if blinks.contains(&k) {
                s.eye.occlusion = 1.0;
            }
            s.seed = derive_seed(base.seed, &format!("frame-{k}"));
            s
        })
        .collect()
}

/// A face in a larger frame with two eyes placed by the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FaceSpec {
    pub width: usize,
    pub height: usize,
    pub face_box: Rect,
    pub background: f64,
    pub palette: Palette,
    /// Image-left eye first.
    pub eyes: [EyeGeometry; 2],
    /// Brow darkness below skin; 0 disables brows.
    pub brow_depth: f64,
    pub noise_sigma: f64,
    pub blur_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FaceTruth {
    pub face_box: Rect,
    pub eyes: [EyeTruth; 2],
}

impl FaceTruth {
    pub fn inter_ocular(&self) -> f64 {
        self.eyes[0].iris_centre.distance(self.eyes[1].iris_centre)
    }
}

pub fn render_face(spec: &FaceSpec) -> Result<(GrayImage, FaceTruth)> {
    check_palette(&spec.palette)?;
    for e in &spec.eyes {
        e.validate()?;
        check_iris_inside(e, spec.width, spec.height)?;
    }
    let fb = spec.face_box;
    let centre = Point2::new(fb.x + 0.5 * fb.width, fb.y + 0.55 * fb.height);
    let (ra, rb) = (0.5 * fb.width, 0.62 * fb.height);
    let mut canvas = Surface::from_fn(spec.width, spec.height, |x, y| {
        let d = Point2::new((x as f64 - centre.x) / ra, (y as f64 - centre.y) / rb);
        if d.dot(d) <= 1.0 {
            // soft side lighting across the face
            (spec.palette.skin + 10.0 * d.x).clamp(0.0, 255.0)
        } else {
            spec.background
        }
    });
    if spec.brow_depth > 0.0 {
        for e in &spec.eyes {
            let mid = (e.corners[0] + e.corners[1]) * 0.5;
            let half_w = 0.6 * e.corners[0].distance(e.corners[1]);
            let bc = Point2::new(mid.x, mid.y - e.upper_lid - 0.06 * fb.width);
            let bh = 0.018 * fb.width;
            let (x0, x1) =
                ((bc.x - half_w).floor().max(0.0) as usize, ((bc.x + half_w).ceil() as usize).min(spec.width - 1));
            let (y0, y1) =
                ((bc.y - 3.0 * bh).floor().max(0.0) as usize, ((bc.y + 3.0 * bh).ceil() as usize).min(spec.height - 1));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let d = Point2::new((x as f64 - bc.x) / half_w, (y as f64 - bc.y) / bh);
                    let v = canvas.get(x, y) - spec.brow_depth * (-0.5 * d.dot(d) * d.dot(d)).exp();
                    canvas.set(x, y, v.max(0.0));
                }
            }
        }
    }
    for e in &spec.eyes {
        e.paint(&mut canvas, &spec.palette);
    }
    let img = finish(canvas, spec.blur_sigma, spec.noise_sigma, spec.seed);
    Ok((img, FaceTruth { face_box: fb, eyes: [spec.eyes[0].truth(), spec.eyes[1].truth()] }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CorpusKind {
    Clean,
    Hard,
    Closed,
}

impl CorpusKind {
    pub fn name(self) -> &'static str {
        match self {
            CorpusKind::Clean => "clean",
            CorpusKind::Hard => "hard",
            CorpusKind::Closed => "closed",
        }
    }

    /// Default corpus size: 200 clean, 200 hard, 100 closed.
    pub fn default_size(self) -> usize {
        match self {
            CorpusKind::Clean | CorpusKind::Hard => 200,
            CorpusKind::Closed => 100,
        }
    }
}

pub const FRAME_WIDTH: usize = 640;
pub const FRAME_HEIGHT: usize = 480;

fn uniform(r: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        r.random_range(lo..hi)
    } else {
        lo
    }
}

/// Draws one face frame of the given corpus kind.
pub fn random_face_spec(kind: CorpusKind, layout: &EyeLayout, seed: u64) -> FaceSpec {
    let mut r = rng(seed);
    let w = uniform(&mut r, 200.0, 280.0);
    let fx = uniform(&mut r, 20.0, FRAME_WIDTH as f64 - w - 20.0);
    let fy = uniform(&mut r, 10.0, FRAME_HEIGHT as f64 - 1.24 * w - 10.0).max(0.0);
    let face_box = Rect::new(fx, fy, w, w);
    let palette = Palette {
        skin: uniform(&mut r, 130.0, 180.0),
        sclera: uniform(&mut r, 200.0, 235.0),
        iris: uniform(&mut r, 25.0, 70.0),
        lash: uniform(&mut r, 20.0, 40.0),
    };
    let hard = kind == CorpusKind::Hard;
    let a = w * uniform(&mut r, 1.0 / 19.0, 1.0 / 15.0);
    let hw = a * uniform(&mut r, 2.2, 2.6);
    let upper = a * if hard { uniform(&mut r, 1.0, 1.35) } else { uniform(&mut r, 1.15, 1.35) };
    let lower = a * uniform(&mut r, 1.1, 1.3);
    let ratio = if hard { uniform(&mut r, 0.45, 1.0) } else { uniform(&mut r, 0.9, 1.0) };
    let phi = ratio.acos();
    let chi = uniform(&mut r, 0.0, 2.0 * core::f64::consts::PI);
    let dir = Point2::new(chi.cos(), 0.6 * chi.sin());
    let offset = dir * (0.5 * hw * phi.sin());
    let occlusion = match kind {
        CorpusKind::Clean => uniform(&mut r, 0.0, 0.1),
        CorpusKind::Hard => uniform(&mut r, 0.0, 0.45),
        CorpusKind::Closed => 1.0,
    };
    let orientation = offset.y.atan2(offset.x) + core::f64::consts::FRAC_PI_2;
    let jitter = Point2::new(uniform(&mut r, -0.02, 0.02) * w, uniform(&mut r, -0.02, 0.02) * w);
    let eye = |side: Side| {
        let f = layout.centre_fraction(side);
        let c = Point2::new(fx + f.x * w, fy + f.y * w) + jitter;
        let tilt = Point2::new(0.0, 0.03 * hw);
        let tilt = if side == Side::Left { tilt } else { -tilt };
        EyeGeometry {
            side,
            iris: EllipseParams::new(c + offset, a, a * ratio, orientation),
            corners: [c - Point2::new(hw, 0.0) + tilt, c + Point2::new(hw, 0.0) - tilt],
            upper_lid: upper,
            lower_lid: lower,
            occlusion,
        }
    };
    FaceSpec {
        width: FRAME_WIDTH,
        height: FRAME_HEIGHT,
        face_box,
        background: uniform(&mut r, 50.0, 120.0),
        palette,
        eyes: [eye(Side::Left), eye(Side::Right)],
        brow_depth: uniform(&mut r, 20.0, 50.0),
        noise_sigma: if hard { uniform(&mut r, 0.0, 12.0) } else { uniform(&mut r, 0.0, 3.0) },
        blur_sigma: if hard { uniform(&mut r, 0.5, 1.5) } else { uniform(&mut r, 0.5, 1.0) },
        seed: r.random(),
    }
}

/// `n` reproducible face specs for `kind` under `master_seed`.
pub fn corpus_specs(kind: CorpusKind, n: usize, master_seed: u64, layout: &EyeLayout) -> Vec<FaceSpec> {
    (0..n).map(|i| random_face_spec(kind, layout, derive_seed(master_seed, &format!("{}-{i}", kind.name())))).collect()
}
