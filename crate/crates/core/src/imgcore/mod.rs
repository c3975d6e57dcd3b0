//! Raster containers, Scharr gradients, convolution and preprocessing.

mod convolve;
mod fft;
mod filter;
mod histogram;
mod resample;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub use convolve::{convolve2d, convolve2d_pair, ConvMode};
pub use filter::gaussian_blur;
pub use histogram::hist_equalize;
pub use resample::{downscale, resize, scale_coordinate};

/// Row-major grid of real values with no range restriction.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Surface {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimension(format!("data length {} does not match {}x{}", data.len(), width, height)));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Value at signed coordinates, zero outside the grid.
    #[inline]
    pub fn get_or_zero(&self, x: isize, y: isize) -> f64 {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            0.0
        } else {
            self.data[y as usize * self.width + x as usize]
        }
    }

    /// Bilinear interpolation; `None` outside `[0, w-1] x [0, h-1]`.
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        if !(x >= 0.0 && y >= 0.0) || x > (self.width - 1) as f64 || y > (self.height - 1) as f64 {
            return None;
        }
        let x0 = (x as usize).min(self.width.saturating_sub(2));
        let y0 = (y as usize).min(self.height.saturating_sub(2));
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        Some(top * (1.0 - fy) + bottom * fy)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Rectangular copy; the rectangle must lie inside the grid.
    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Result<Self> {
        if x + width > self.width || y + height > self.height {
            return Err(Error::Bounds(format!(
                "crop {}x{}+{}+{} exceeds {}x{}",
                width, height, x, y, self.width, self.height
            )));
        }
        Ok(Self::from_fn(width, height, |cx, cy| self.get(x + cx, y + cy)))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

/// Intensity raster with values in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage(Surface);

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if let Some(bad) = data.iter().find(|v| !(0.0..=255.0).contains(*v)) {
            return Err(Error::Argument(format!("intensity {bad} outside [0, 255]")));
        }
        Surface::new(width, height, data).map(Self)
    }

    /// Builds an image, clamping every value into `[0, 255]` (NaN maps to 0).
    pub fn from_surface_clamped(s: Surface) -> Self {
        Self(s.map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 255.0) }))
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_surface_clamped(Surface::from_fn(width, height, f))
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self(Surface::filled(width, height, value.clamp(0.0, 255.0)))
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Surface::new(width, height, bytes.iter().map(|&b| f64::from(b)).collect()).map(Self)
    }

    /// Rounded 8-bit copy of the data.
    pub fn to_u8(&self) -> Vec<u8> {
        self.0.data.iter().map(|&v| (v + 0.5) as u8).collect()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.0.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.0.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0.get(x, y)
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.0.set(x, y, v.clamp(0.0, 255.0));
    }

    pub fn data(&self) -> &[f64] {
        &self.0.data
    }

    pub fn as_surface(&self) -> &Surface {
        &self.0
    }

    pub fn into_surface(self) -> Surface {
        self.0
    }

    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        self.0.sample(x, y)
    }

    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Result<Self> {
        self.0.crop(x, y, width, height).map(Self)
    }

    /// Horizontal mirror image.
    pub fn flip_horizontal(&self) -> Self {
        let w = self.width();
        Self(Surface::from_fn(w, self.height(), |x, y| self.get(w - 1 - x, y)))
    }
}

/// Per-pixel horizontal and vertical derivatives of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub gx: Surface,
    pub gy: Surface,
}

impl GradientField {
    pub fn new(gx: Surface, gy: Surface) -> Result<Self> {
        if gx.width() != gy.width() || gx.height() != gy.height() {
            return Err(Error::Dimension("gradient components differ in size".into()));
        }
        Ok(Self { gx, gy })
    }

    pub fn width(&self) -> usize {
        self.gx.width()
    }

    pub fn height(&self) -> usize {
        self.gx.height()
    }

    /// Bilinearly interpolated gradient vector.
    pub fn sample(&self, x: f64, y: f64) -> Option<crate::Point2> {
        Some(crate::Point2::new(self.gx.sample(x, y)?, self.gy.sample(x, y)?))
    }
}

/// Square real kernel with odd side and centred anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    size: usize,
    data: Vec<f64>,
}

impl Kernel2D {
    pub fn new(size: usize, data: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::Dimension(format!("kernel side {size} is not odd")));
        }
        if data.len() != size * size {
            return Err(Error::Dimension(format!("kernel data length {} does not match side {size}", data.len())));
        }
        Ok(Self { size, data })
    }

    /// Builds a kernel from offsets `(m, n)` relative to the anchor.
    pub fn from_offsets(size: usize, mut f: impl FnMut(isize, isize) -> f64) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::Dimension(format!("kernel side {size} is not odd")));
        }
        let a = (size / 2) as isize;
        let mut data = Vec::with_capacity(size * size);
        for n in -a..=a {
            for m in -a..=a {
                data.push(f(m, n));
            }
        }
        Ok(Self { size, data })
    }

    pub fn identity() -> Self {
        Self { size: 1, data: vec![1.0] }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn anchor(&self) -> usize {
        self.size / 2
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Coefficient at offset `(m, n)` from the anchor; zero outside.
    pub fn at(&self, m: isize, n: isize) -> f64 {
        let a = self.anchor() as isize;
        if m.abs() > a || n.abs() > a {
            return 0.0;
        }
        self.data[(n + a) as usize * self.size + (m + a) as usize]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { size: self.size, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.size != other.size {
            return Err(Error::Dimension("kernel sizes differ".into()));
        }
        Ok(Self { size: self.size, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() })
    }

    /// Full linear convolution of two kernels (side `s1 + s2 - 1`).
    pub fn convolve_full(&self, other: &Self) -> Self {
        let size = self.size + other.size - 1;
        let a1 = self.anchor() as isize;
        let a2 = other.anchor() as isize;
        let a = (size / 2) as isize;
        let mut data = vec![0.0; size * size];
        for n1 in -a1..=a1 {
            for m1 in -a1..=a1 {
                let v1 = self.at(m1, n1);
                if v1 == 0.0 {
                    continue;
                }
                for n2 in -a2..=a2 {
                    for m2 in -a2..=a2 {
                        let idx = (n1 + n2 + a) as usize * size + (m1 + m2 + a) as usize;
                        data[idx] += v1 * other.at(m2, n2);
                    }
                }
            }
        }
        Self { size, data }
    }

    /// Central `size x size` block; `size` must be odd and not exceed the side.
    pub fn crop_centre(&self, size: usize) -> Result<Self> {
        if size.is_multiple_of(2) || size > self.size {
            return Err(Error::Dimension(format!("cannot crop side {} to {size}", self.size)));
        }
        let h = (size / 2) as isize;
        Self::from_offsets(size, |m, n| if m.abs() <= h && n.abs() <= h { self.at(m, n) } else { 0.0 })
    }
}

/// Scharr x-derivative stencil (correlation form).
pub fn scharr_x() -> Kernel2D {
    Kernel2D { size: 3, data: vec![-3.0, 0.0, 3.0, -10.0, 0.0, 10.0, -3.0, 0.0, 3.0] }
}

/// Scharr y-derivative stencil (transpose of [`scharr_x`]).
pub fn scharr_y() -> Kernel2D {
    Kernel2D { size: 3, data: vec![-3.0, -10.0, -3.0, 0.0, 0.0, 0.0, 3.0, 10.0, 3.0] }
}

/// Scharr gradients by correlation with the unnormalized 3/10/3 stencils.
/// The one-pixel border is left at zero.
pub fn scharr_gradients(img: &GrayImage) -> Result<GradientField> {
    scharr_surface(img.as_surface())
}

pub(crate) fn scharr_surface(s: &Surface) -> Result<GradientField> {
    let (w, h) = (s.width(), s.height());
    if w < 3 || h < 3 {
        return Err(Error::Dimension(format!("image {w}x{h} smaller than 3x3")));
    }
    let mut gx = Surface::zeros(w, h);
    let mut gy = Surface::zeros(w, h);
    let d = s.data();
    for y in 1..h - 1 {
        let up = (y - 1) * w;
        let mid = y * w;
        let dn = (y + 1) * w;
        for x in 1..w - 1 {
            let (l, r) = (x - 1, x + 1);
            let dx = 3.0 * (d[up + r] - d[up + l]) + 10.0 * (d[mid + r] - d[mid + l]) + 3.0 * (d[dn + r] - d[dn + l]);
            let dy = 3.0 * (d[dn + l] - d[up + l]) + 10.0 * (d[dn + x] - d[up + x]) + 3.0 * (d[dn + r] - d[up + r]);
            gx.data_mut()[mid + x] = dx;
            gy.data_mut()[mid + x] = dy;
        }
    }
    Ok(GradientField { gx, gy })
}
