//! Persisted models and plot-ready CSV outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use eyeloc_core::closure::{HogConfig, SvmModel};
use eyeloc_core::gaze::{CalibrationSet, EyePair, GazeModels, ScreenGeometry};
use eyeloc_core::metrics::{AccuracyCurve, ErrorRecord};
use eyeloc_core::pipeline::EyeDetection;
use eyeloc_core::{Point2, Side};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Fixed six-decimal rendering used by every numeric CSV field.
pub fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

const SVM_MAGIC: &str = "eyeloc-svm 1";

/// Text model: magic line, `key value` header lines, `weights`, then one
/// weight per line.
pub fn svm_to_string(m: &SvmModel, hog: &HogConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{SVM_MAGIC}");
    let _ = writeln!(s, "dimension {}", m.dim());
    let _ = writeln!(s, "cell_size {}", hog.cell_size);
    let _ = writeln!(s, "n_orientations {}", hog.n_orientations);
    let _ = writeln!(s, "block {}", hog.block);
    let _ = writeln!(s, "c {}", m.c);
    let _ = writeln!(s, "bias {}", m.b);
    s.push_str("weights\n");
    for w in &m.w {
        let _ = writeln!(s, "{w}");
    }
    s
}

pub fn svm_from_str(path: &Path, text: &str) -> Result<(SvmModel, HogConfig)> {
    let bad = |m: String| CliError::parse(path, m);
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SVM_MAGIC) {
        return Err(bad("not an eyeloc SVM model".into()));
    }
    let mut hog = HogConfig::default();
    let (mut dim, mut c, mut b) = (None, 1.0, None);
    for line in lines.by_ref() {
        let line = line.trim();
        if line == "weights" {
            break;
        }
        let (k, v) = line.split_once(' ').ok_or_else(|| bad(format!("bad header line {line:?}")))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad(format!("bad value for {k}: {v:?}")));
        match k {
            "dimension" => dim = Some(num(v)? as usize),
            "cell_size" => hog.cell_size = num(v)? as usize,
            "n_orientations" => hog.n_orientations = num(v)? as usize,
            "block" => hog.block = num(v)? as usize,
            "c" => c = num(v)?,
            "bias" => b = Some(num(v)?),
            _ => return Err(bad(format!("unknown header key {k:?}"))),
        }
    }
    let dim = dim.ok_or_else(|| bad("missing dimension".into()))?;
    let b = b.ok_or_else(|| bad("missing bias".into()))?;
    let w: Vec<f64> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|_| bad(format!("bad weight {l:?}"))))
        .collect::<Result<_>>()?;
    if w.len() != dim {
        return Err(bad(format!("header says {dim} weights, found {}", w.len())));
    }
    hog.validate().map_err(|e| bad(e.to_string()))?;
    if hog.feature_len() != dim {
        return Err(bad(format!("dimension {dim} does not match the HOG layout ({})", hog.feature_len())));
    }
    Ok((SvmModel { w, b, c }, hog))
}

pub fn save_svm(path: &Path, m: &SvmModel, hog: &HogConfig) -> Result<()> {
    write_file(path, &svm_to_string(m, hog))
}

pub fn load_svm(path: &Path) -> Result<(SvmModel, HogConfig)> {
    svm_from_str(path, &fs::read_to_string(path).map_err(|e| CliError::io(path, e))?)
}

pub fn save_gaze_models(path: &Path, m: &GazeModels) -> Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(|e| CliError::Other(e.to_string()))?;
    write_file(path, &(text + "\n"))
}

pub fn load_gaze_models(path: &Path) -> Result<GazeModels> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))
}

/// One calibration sample row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub target_x: f64,
    pub target_y: f64,
    pub eye: EyeTag,
    pub ecic_x: f64,
    pub ecic_y: f64,
    pub frame_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EyeTag {
    L,
    R,
}

impl From<Side> for EyeTag {
    fn from(s: Side) -> Self {
        match s {
            Side::Left => EyeTag::L,
            Side::Right => EyeTag::R,
        }
    }
}

pub fn read_calibration_rows(path: &Path) -> Result<Vec<CalibrationRow>> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::parse(path, e.to_string()))?;
    rd.deserialize().map(|r| r.map_err(|e| CliError::parse(path, e.to_string()))).collect()
}

pub fn write_calibration_rows(path: &Path, rows: &[CalibrationRow]) -> Result<()> {
    let mut s = String::from("target_x,target_y,eye,ecic_x,ecic_y,frame_index\n");
    for r in rows {
        let eye = if r.eye == EyeTag::L { "L" } else { "R" };
        let _ = writeln!(s, "{},{},{eye},{},{},{}", r.target_x, r.target_y, r.ecic_x, r.ecic_y, r.frame_index);
    }
    write_file(path, &s)
}

/// A target and its samples, grouped per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFrames {
    pub target: Point2,
    pub frames: Vec<(usize, EyePair)>,
}

/// Groups rows by target (first-appearance order), then by frame index.
pub fn group_rows(rows: &[CalibrationRow]) -> Vec<TargetFrames> {
    let mut out: Vec<TargetFrames> = Vec::new();
    for r in rows {
        let t = Point2::new(r.target_x, r.target_y);
        let ti = match out.iter().position(|g| g.target == t) {
            Some(i) => i,
            None => {
                out.push(TargetFrames { target: t, frames: Vec::new() });
                out.len() - 1
            }
        };
        let frames = &mut out[ti].frames;
        let fi = match frames.iter().position(|(f, _)| *f == r.frame_index) {
            Some(i) => i,
            None => {
                frames.push((r.frame_index, EyePair { left: None, right: None }));
                frames.len() - 1
            }
        };
        let v = Some(Point2::new(r.ecic_x, r.ecic_y));
        match r.eye {
            EyeTag::L => frames[fi].1.left = v,
            EyeTag::R => frames[fi].1.right = v,
        }
    }
    out
}

/// Builds a calibration set. With `grid_side > 0` the targets must be exactly
/// the expected grid (0.5 px tolerance), reordered to grid order.
pub fn calibration_set(
    rows: &[CalibrationRow],
    screen: &ScreenGeometry,
    grid_side: usize,
    margin: f64,
    baseline_angle: f64,
) -> Result<CalibrationSet> {
    let groups = group_rows(rows);
    if groups.is_empty() {
        return Err(eyeloc_core::Error::Calibration("calibration file holds no samples".into()).into());
    }
    let ordered: Vec<&TargetFrames> = if grid_side == 0 {
        groups.iter().collect()
    } else {
        let grid = screen.grid(grid_side, margin);
        let near = |a: Point2, b: Point2| a.distance(b) <= 0.5;
        if let Some(g) = groups.iter().find(|g| !grid.iter().any(|p| near(*p, g.target))) {
            return Err(eyeloc_core::Error::Calibration(format!(
                "target ({}, {}) is not on the {grid_side}x{grid_side} grid",
                g.target.x, g.target.y
            ))
            .into());
        }
        grid.iter()
            .map(|p| {
                groups.iter().find(|g| near(*p, g.target)).ok_or_else(|| {
                    CliError::from(eyeloc_core::Error::Calibration(format!(
                        "grid point ({}, {}) has no samples",
                        p.x, p.y
                    )))
                })
            })
            .collect::<Result<_>>()?
    };
    let mut set = CalibrationSet::new(ordered.iter().map(|g| g.target).collect(), baseline_angle);
    for (i, g) in ordered.iter().enumerate() {
        for (_, pair) in &g.frames {
            set.push(i, *pair)?;
        }
    }
    Ok(set)
}

pub fn detections_header() -> &'static str {
    "filename,eye,x,y,a,b,orientation,gof,accepted,psr\n"
}

/// Detection row; missing values are left empty.
pub fn detection_row(filename: &str, d: &EyeDetection) -> String {
    let opt = |v: Option<f64>| v.map(f6).unwrap_or_default();
    let e = d.fit.as_ref().map(|f| f.ellipse);
    let centre = d.centre;
    format!(
        "{filename},{},{},{},{},{},{},{},{},{}\n",
        if d.side == Side::Left { "L" } else { "R" },
        opt(centre.map(|c| c.x)),
        opt(centre.map(|c| c.y)),
        opt(e.map(|e| e.a)),
        opt(e.map(|e| e.b)),
        opt(e.map(|e| e.orientation)),
        opt(d.fit.as_ref().map(|f| f.gof)),
        d.accepted(),
        opt(d.coarse.as_ref().map(|c| c.psr)),
    )
}

pub fn items_csv(rows: &[(String, Option<ErrorRecord>)]) -> String {
    let mut s = String::from("filename,d_l,d_r,w,e_wec,e_aec,e_bec\n");
    for (name, r) in rows {
        match r {
            Some(r) => {
                let _ = writeln!(
                    s,
                    "{name},{},{},{},{},{},{}",
                    f6(r.d_l),
                    f6(r.d_r),
                    f6(r.w),
                    f6(r.e_wec),
                    f6(r.e_aec),
                    f6(r.e_bec)
                );
            }
            None => {
                let _ = writeln!(s, "{name},,,,,,");
            }
        }
    }
    s
}

pub fn summary_csv(curves: &[AccuracyCurve]) -> String {
    let mut s = String::from("metric,threshold,fraction\n");
    for c in curves {
        for (t, f) in c.thresholds.iter().zip(&c.fraction_detected) {
            let _ = writeln!(s, "{},{},{}", c.metric.name(), f6(*t), f6(*f));
        }
    }
    s
}

/// Plain-text table with one row per metric, percentages per threshold.
pub fn summary_table(curves: &[AccuracyCurve]) -> String {
    let mut s = String::from("metric");
    if let Some(c) = curves.first() {
        for t in &c.thresholds {
            let _ = write!(s, "  e<={t:.2}");
        }
    }
    s.push('\n');
    for c in curves {
        let _ = write!(s, "{:<6}", c.metric.name().to_uppercase());
        for f in &c.fraction_detected {
            let _ = write!(s, "  {:>7.2}", 100.0 * f);
        }
        s.push('\n');
    }
    s
}

/// Sweep row: per-metric accuracy at 0.05, or `None` for an invalid scale.
pub type SweepRow = (f64, Option<[f64; 3]>);

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("scale,wec@0.05,aec@0.05,bec@0.05,valid\n");
    for (scale, v) in rows {
        match v {
            Some(v) => {
                let _ = writeln!(s, "{},{},{},{},true", f6(*scale), f6(v[0]), f6(v[1]), f6(v[2]));
            }
            None => {
                let _ = writeln!(s, "{},,,,false", f6(*scale));
            }
        }
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text)
}
