//! Raster loading and saving.

use std::path::Path;

use eyeloc_core::GrayImage;
use image::{DynamicImage, ImageFormat};

use crate::error::{CliError, Result};

/// Rec. 601 luma.
pub fn luma601(r: u8, g: u8, b: u8) -> f64 {
    0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
}

/// Loads PGM (P2/P5), PNG or JPEG; colour is reduced to Rec. 601 luma.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_gray(&bytes).map_err(|m| CliError::parse(path, m))
}

pub fn decode_gray(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let img = image::load_from_memory(bytes).map_err(|e| e.to_string())?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLuma16(g) => g.into_raw().into_iter().map(|v| v as f64 / 257.0).collect(),
        other => other.to_rgb8().pixels().map(|p| luma601(p[0], p[1], p[2])).collect(),
    };
    GrayImage::new(w, h, data).map_err(|e| e.to_string())
}

/// Writes a binary PGM.
pub fn save_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.to_u8())
        .ok_or_else(|| CliError::Other("raster size mismatch".into()))?;
    buf.save_with_format(path, ImageFormat::Pnm).map_err(|e| CliError::parse(path, e.to_string()))
}
