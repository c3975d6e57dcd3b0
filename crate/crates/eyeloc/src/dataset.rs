//! Labelled datasets: BioID, Gi4E and the CSV manifest format.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use eyeloc_core::{Point2, Rect};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub image_path: PathBuf,
    /// Image-left iris centre.
    pub gt_left: Point2,
    pub gt_right: Point2,
    /// Inner corners, image-left eye first.
    pub gt_corners: Option<[Point2; 2]>,
    pub face_box: Option<Rect>,
}

impl DatasetItem {
    pub fn new(image_path: PathBuf, a: Point2, b: Point2) -> Self {
        let (gt_left, gt_right) = if a.x <= b.x { (a, b) } else { (b, a) };
        Self { image_path, gt_left, gt_right, gt_corners: None, face_box: None }
    }

    pub fn file_name(&self) -> String {
        self.image_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    }

    /// Ground truth must lie inside a `w x h` image.
    pub fn check_bounds(&self, w: usize, h: usize) -> Result<()> {
        let inside = |p: Point2| p.x >= 0.0 && p.y >= 0.0 && p.x <= w as f64 - 1.0 && p.y <= h as f64 - 1.0;
        if inside(self.gt_left) && inside(self.gt_right) {
            Ok(())
        } else {
            Err(CliError::parse(&self.image_path, format!("ground truth outside the {w}x{h} image")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Bioid,
    Gi4e,
    Custom,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> =
        fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    v.sort();
    Ok(v)
}

fn has_ext(p: &Path, ext: &str) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Parses a BioID `.eye` file: a `#` header line, then `LX LY RX RY`.
pub fn parse_bioid_eye(path: &Path, text: &str) -> Result<(Point2, Point2)> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some(h) if h.starts_with('#') => {}
        _ => return Err(CliError::parse(path, "missing '#' header line")),
    }
    let line = lines.next().ok_or_else(|| CliError::parse(path, "missing coordinate line"))?;
    let nums: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| CliError::parse(path, format!("bad number {t:?}"))))
        .collect::<Result<_>>()?;
    if nums.len() != 4 {
        return Err(CliError::parse(path, format!("expected 4 numbers, found {}", nums.len())));
    }
    Ok((Point2::new(nums[0], nums[1]), Point2::new(nums[2], nums[3])))
}

/// BioID directory of `name.pgm` / `name.eye` pairs. The file's L/R refer to
/// the subject, so eyes are assigned to image sides by x coordinate.
pub fn load_bioid(dir: &Path) -> Result<Vec<DatasetItem>> {
    let entries = sorted_entries(dir)?;
    let mut out = Vec::new();
    for eye in entries.iter().filter(|p| has_ext(p, "eye")) {
        let img = eye.with_extension("pgm");
        if !img.is_file() {
            warn!("{}: no matching .pgm, skipped", eye.display());
            continue;
        }
        let (a, b) = parse_bioid_eye(eye, &read_to_string(eye)?)?;
        out.push(DatasetItem::new(img, a, b));
    }
    for img in entries.iter().filter(|p| has_ext(p, "pgm")) {
        if !img.with_extension("eye").is_file() {
            warn!("{}: no matching .eye, skipped", img.display());
        }
    }
    Ok(out)
}

/// 1-based point indices of a Gi4E label row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Gi4eColumns {
    pub left_iris: usize,
    pub right_iris: usize,
    pub left_inner_corner: Option<usize>,
    pub right_inner_corner: Option<usize>,
}

impl Default for Gi4eColumns {
    /// Six points per row, image left to right: outer corner, iris, inner
    /// corner of the left eye, then inner corner, iris, outer corner of the right.
    fn default() -> Self {
        Self { left_iris: 2, right_iris: 5, left_inner_corner: Some(3), right_inner_corner: Some(4) }
    }
}

/// One label row: file name plus its coordinate pairs.
pub fn parse_gi4e_row(path: &Path, line: &str) -> Result<(String, Vec<Point2>)> {
    let mut toks = line.split_whitespace();
    let name = toks.next().ok_or_else(|| CliError::parse(path, "empty label row"))?.to_string();
    let nums: Vec<f64> = toks
        .map(|t| t.parse::<f64>().map_err(|_| CliError::parse(path, format!("{name}: bad number {t:?}"))))
        .collect::<Result<_>>()?;
    if !nums.len().is_multiple_of(2) {
        return Err(CliError::parse(path, format!("{name}: odd coordinate count {}", nums.len())));
    }
    Ok((name, nums.chunks(2).map(|c| Point2::new(c[0], c[1])).collect()))
}

fn pick(path: &Path, name: &str, pts: &[Point2], i: usize) -> Result<Point2> {
    i.checked_sub(1)
        .and_then(|k| pts.get(k).copied())
        .ok_or_else(|| CliError::parse(path, format!("{name}: point {i} not present in a row of {}", pts.len())))
}

/// Gi4E layout: label `.txt` files in `dir/labels` (or `dir`), images in
/// `dir/images` (or `dir`).
pub fn load_gi4e(dir: &Path, cols: &Gi4eColumns) -> Result<Vec<DatasetItem>> {
    let label_dir = if dir.join("labels").is_dir() { dir.join("labels") } else { dir.to_path_buf() };
    let image_dir = if dir.join("images").is_dir() { dir.join("images") } else { dir.to_path_buf() };
    let mut out = Vec::new();
    for lf in sorted_entries(&label_dir)?.into_iter().filter(|p| has_ext(p, "txt")) {
        for line in read_to_string(&lf)?.lines().filter(|l| !l.trim().is_empty()) {
            let (name, pts) = parse_gi4e_row(&lf, line)?;
            let img = image_dir.join(&name);
            if !img.is_file() {
                warn!("{}: listed in {} but missing, skipped", img.display(), lf.display());
                continue;
            }
            let l = pick(&lf, &name, &pts, cols.left_iris)?;
            let r = pick(&lf, &name, &pts, cols.right_iris)?;
            let mut item = DatasetItem::new(img, l, r);
            if let (Some(a), Some(b)) = (cols.left_inner_corner, cols.right_inner_corner) {
                let (a, b) = (pick(&lf, &name, &pts, a)?, pick(&lf, &name, &pts, b)?);
                item.gt_corners = Some(if a.x <= b.x { [a, b] } else { [b, a] });
            }
            out.push(item);
        }
    }
    Ok(out)
}

/// One manifest row. Corner and face-box columns are optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub filename: String,
    pub lx: f64,
    pub ly: f64,
    pub rx: f64,
    pub ry: f64,
    #[serde(default)]
    pub lcx: Option<f64>,
    #[serde(default)]
    pub lcy: Option<f64>,
    #[serde(default)]
    pub rcx: Option<f64>,
    #[serde(default)]
    pub rcy: Option<f64>,
    #[serde(default)]
    pub face_x: Option<f64>,
    #[serde(default)]
    pub face_y: Option<f64>,
    #[serde(default)]
    pub face_w: Option<f64>,
    #[serde(default)]
    pub face_h: Option<f64>,
}

impl ManifestRow {
    pub fn from_item(item: &DatasetItem, base: &Path) -> Self {
        let filename = item.image_path.strip_prefix(base).unwrap_or(&item.image_path).to_string_lossy().into_owned();
        let c = item.gt_corners;
        let f = item.face_box;
        Self {
            filename,
            lx: item.gt_left.x,
            ly: item.gt_left.y,
            rx: item.gt_right.x,
            ry: item.gt_right.y,
            lcx: c.map(|c| c[0].x),
            lcy: c.map(|c| c[0].y),
            rcx: c.map(|c| c[1].x),
            rcy: c.map(|c| c[1].y),
            face_x: f.map(|f| f.x),
            face_y: f.map(|f| f.y),
            face_w: f.map(|f| f.width),
            face_h: f.map(|f| f.height),
        }
    }

    pub fn into_item(self, base: &Path) -> DatasetItem {
        let corners = match (self.lcx, self.lcy, self.rcx, self.rcy) {
            (Some(a), Some(b), Some(c), Some(d)) => Some([Point2::new(a, b), Point2::new(c, d)]),
            _ => None,
        };
        let face_box = match (self.face_x, self.face_y, self.face_w, self.face_h) {
            (Some(x), Some(y), Some(w), Some(h)) => Some(Rect::new(x, y, w, h)),
            _ => None,
        };
        DatasetItem {
            image_path: base.join(&self.filename),
            gt_left: Point2::new(self.lx, self.ly),
            gt_right: Point2::new(self.rx, self.ry),
            gt_corners: corners,
            face_box,
        }
    }
}

/// Reads a CSV manifest; file names resolve against its directory.
pub fn load_custom(manifest: &Path) -> Result<Vec<DatasetItem>> {
    let base = manifest.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(manifest)
        .map_err(|e| CliError::parse(manifest, e.to_string()))?;
    let mut out = Vec::new();
    for row in rd.deserialize::<ManifestRow>() {
        let row = row.map_err(|e| CliError::parse(manifest, e.to_string()))?;
        out.push(row.into_item(&base));
    }
    Ok(out)
}

pub fn write_custom(manifest: &Path, items: &[DatasetItem]) -> Result<()> {
    let base = manifest.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut w = csv::Writer::from_path(manifest).map_err(|e| CliError::parse(manifest, e.to_string()))?;
    for it in items {
        w.serialize(ManifestRow::from_item(it, &base))?;
    }
    w.flush().map_err(|e| CliError::io(manifest, e))
}

/// Loads `path` as the given dataset kind. A directory passed as a custom
/// dataset is read through its `manifest.csv`.
pub fn load_dataset(kind: DatasetKind, path: &Path, cols: &Gi4eColumns) -> Result<Vec<DatasetItem>> {
    if !path.exists() {
        return Err(CliError::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    match kind {
        DatasetKind::Bioid => load_bioid(path),
        DatasetKind::Gi4e => load_gi4e(path, cols),
        DatasetKind::Custom if path.is_dir() => load_custom(&path.join("manifest.csv")),
        DatasetKind::Custom => load_custom(path),
    }
}

/// Manifest rows keyed by file name, for looking up face boxes.
pub fn manifest_index(items: &[DatasetItem]) -> BTreeMap<String, DatasetItem> {
    items.iter().map(|i| (i.file_name(), i.clone())).collect()
}
