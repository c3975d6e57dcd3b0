//! "Same"-size linear convolution with zero padding, spatial or via FFT.

use alloc::format;
use alloc::vec;

use num_complex::Complex64;

use super::fft::fft2d;
use super::{Kernel2D, Surface};
use crate::{Error, Result};

/// Evaluation strategy for [`convolve2d`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ConvMode {
    Spatial,
    Fft,
    /// FFT for kernels wider than 15 pixels, spatial otherwise.
    #[default]
    Auto,
}

impl ConvMode {
    fn resolve(self, kernel_size: usize) -> Self {
        match self {
            ConvMode::Auto if kernel_size > 15 => ConvMode::Fft,
            ConvMode::Auto => ConvMode::Spatial,
            m => m,
        }
    }
}

fn check_fits(img: &Surface, k: &Kernel2D) -> Result<()> {
    if k.size() > img.width() || k.size() > img.height() {
        return Err(Error::Dimension(format!(
            "kernel side {} larger than image {}x{}",
            k.size(),
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// `out(x, y) = sum_{m,n} k(m, n) * img(x - m, y - n)`, zero outside the image.
pub fn convolve2d(img: &Surface, k: &Kernel2D, mode: ConvMode) -> Result<Surface> {
    check_fits(img, k)?;
    match mode.resolve(k.size()) {
        ConvMode::Fft => Ok(fft_pair(img, k, None).0),
        _ => Ok(spatial(img, k)),
    }
}

/// Convolves one image with two kernels of equal size, sharing the image
/// transform in FFT mode.
pub fn convolve2d_pair(img: &Surface, k1: &Kernel2D, k2: &Kernel2D, mode: ConvMode) -> Result<(Surface, Surface)> {
    check_fits(img, k1)?;
    if k1.size() != k2.size() {
        return Err(Error::Dimension("paired kernels differ in size".into()));
    }
    match mode.resolve(k1.size()) {
        ConvMode::Fft => {
            let (a, b) = fft_pair(img, k1, Some(k2));
            Ok((a, b.expect("second kernel requested")))
        }
        _ => Ok((spatial(img, k1), spatial(img, k2))),
    }
}

fn spatial(img: &Surface, k: &Kernel2D) -> Surface {
    let (w, h) = (img.width(), img.height());
    let a = k.anchor() as isize;
    let ks = k.size();
    let kd = k.data();
    let src = img.data();
    let mut out = Surface::zeros(w, h);
    let dst = out.data_mut();
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for n in -a..=a {
                let sy = y - n;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                let row = sy as usize * w;
                let krow = (n + a) as usize * ks;
                // m ranges so that 0 <= x - m < w
                let m_lo = (-a).max(x - w as isize + 1);
                let m_hi = a.min(x);
                for m in m_lo..=m_hi {
                    acc += kd[krow + (m + a) as usize] * src[row + (x - m) as usize];
                }
            }
            dst[y as usize * w + x as usize] = acc;
        }
    }
    out
}

fn fft_pair(img: &Surface, k1: &Kernel2D, k2: Option<&Kernel2D>) -> (Surface, Option<Surface>) {
    let (w, h) = (img.width(), img.height());
    let ks = k1.size();
    let pw = (w + ks - 1).next_power_of_two();
    let ph = (h + ks - 1).next_power_of_two();
    let zero = Complex64::new(0.0, 0.0);

    let mut fi = vec![zero; pw * ph];
    for y in 0..h {
        for x in 0..w {
            fi[y * pw + x] = Complex64::new(img.get(x, y), 0.0);
        }
    }
    // two real kernels packed into one complex transform
    let mut fk = vec![zero; pw * ph];
    for y in 0..ks {
        for x in 0..ks {
            let re = k1.data()[y * ks + x];
            let im = k2.map_or(0.0, |k| k.data()[y * ks + x]);
            fk[y * pw + x] = Complex64::new(re, im);
        }
    }
    fft2d(&mut fi, pw, ph, false);
    fft2d(&mut fk, pw, ph, false);
    for (a, b) in fi.iter_mut().zip(&fk) {
        *a *= b;
    }
    fft2d(&mut fi, pw, ph, true);

    let a = k1.anchor();
    let first = Surface::from_fn(w, h, |x, y| fi[(y + a) * pw + x + a].re);
    let second = k2.map(|_| Surface::from_fn(w, h, |x, y| fi[(y + a) * pw + x + a].im));
    (first, second)
}
