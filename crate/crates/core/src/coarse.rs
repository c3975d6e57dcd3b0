//! Coarse iris-centre detection.
//!
//! The image is correlated with a radially oriented annulus kernel folded
//! together with the Scharr derivatives into one real kernel, mixed with a
//! darkness-weighted intensity response, and the local maximum with the best
//! peak-to-sidelobe ratio is reported as the coarse centre.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::imgcore::{convolve2d_pair, scharr_x, scharr_y, ConvMode, GrayImage, Kernel2D, Surface};
use crate::{Error, Point2, Result};

/// Side of the square window used for the peak-to-sidelobe ratio.
pub const PSR_WINDOW: usize = 11;

/// Number of local maxima compared by PSR.
pub const DEFAULT_CANDIDATES: usize = 5;

/// Radius range and mixing weights of the annulus detector.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnnulusParams {
    pub r_min: f64,
    pub r_max: f64,
    /// Horizontal-gradient weight; vertical gradients get `1 / beta`.
    pub beta: f64,
    /// Weight of the gradient term against the intensity term.
    pub lambda: f64,
}

impl AnnulusParams {
    pub const DEFAULT_BETA: f64 = 2.0;
    pub const DEFAULT_LAMBDA: f64 = 0.95;

    pub fn new(r_min: f64, r_max: f64, beta: f64, lambda: f64) -> Result<Self> {
        let p = Self { r_min, r_max, beta, lambda };
        p.validate()?;
        Ok(p)
    }

    /// Radius range with the default `beta = 2`, `lambda = 0.95`.
    pub fn with_radii(r_min: f64, r_max: f64) -> Result<Self> {
        Self::new(r_min, r_max, Self::DEFAULT_BETA, Self::DEFAULT_LAMBDA)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.r_max.is_finite()) {
            return Err(Error::Config(format!("need 0 < r_min < r_max, got {} / {}", self.r_min, self.r_max)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        Ok(())
    }

    /// Common odd side of every detector kernel: `2 * ceil(r_max) + 3`.
    pub fn kernel_side(&self) -> usize {
        2 * self.r_max.ceil() as usize + 3
    }

    /// Border excluded from peak search; also keeps the PSR window inside.
    pub fn margin(&self) -> usize {
        (self.r_max.ceil() as usize).max(PSR_WINDOW / 2)
    }
}

/// Complex annulus kernel stored as real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct CoaKernel {
    pub re: Kernel2D,
    pub im: Kernel2D,
}

impl CoaKernel {
    /// `(re, im)` at offset `(m, n)`, `m` horizontal and `n` vertical.
    pub fn value(&self, m: isize, n: isize) -> (f64, f64) {
        (self.re.at(m, n), self.im.at(m, n))
    }
}

/// Unit radial phasors weighted by `1 / r` on the open annulus
/// `r_min^2 < m^2 + n^2 < r_max^2`. The phase is `atan2(n, m)`, so the field
/// points outwards over the full circle.
pub fn build_coa_kernel(p: &AnnulusParams) -> Result<CoaKernel> {
    p.validate()?;
    let side = p.kernel_side();
    let (lo, hi) = (p.r_min * p.r_min, p.r_max * p.r_max);
    let inside = |m: isize, n: isize| {
        let d = (m * m + n * n) as f64;
        d > lo && d < hi
    };
    // (1/r) * (cos, sin) = (m, n) / r^2
    let re = Kernel2D::from_offsets(side, |m, n| if inside(m, n) { m as f64 / (m * m + n * n) as f64 } else { 0.0 })?;
    let im = Kernel2D::from_offsets(side, |m, n| if inside(m, n) { n as f64 / (m * m + n * n) as f64 } else { 0.0 })?;
    Ok(CoaKernel { re, im })
}

/// `1 / r` on the open disc of radius `r_max`, with the singular centre
/// capped at 1.
pub fn build_weight_kernel(p: &AnnulusParams) -> Result<Kernel2D> {
    p.validate()?;
    let hi = p.r_max * p.r_max;
    Kernel2D::from_offsets(p.kernel_side(), |m, n| {
        let d = (m * m + n * n) as f64;
        if m == 0 && n == 0 {
            1.0
        } else if d < hi {
            1.0 / d.sqrt()
        } else {
            0.0
        }
    })
}

/// Single real kernel `beta * Re(O) (*) Sx + (1/beta) * Im(O) (*) Sy`, so that
/// convolving the raw image with it reproduces the staged gradient pipeline.
pub fn compose_rcc(p: &AnnulusParams) -> Result<Kernel2D> {
    compose_from(&build_coa_kernel(p)?, p)
}

fn compose_from(coa: &CoaKernel, p: &AnnulusParams) -> Result<Kernel2D> {
    let side = p.kernel_side();
    // the outer ring of the annulus kernels is zero, so cropping the full
    // convolution back to `side` loses nothing
    let gx = coa.re.convolve_full(&scharr_x()).crop_centre(side)?;
    let gy = coa.im.convolve_full(&scharr_y()).crop_centre(side)?;
    gx.scaled(p.beta).add(&gy.scaled(1.0 / p.beta))
}

/// Immutable detector kernels for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSet {
    pub o_coa: CoaKernel,
    pub w_a: Kernel2D,
    pub c_rcc: Kernel2D,
    pub params: AnnulusParams,
}

impl KernelSet {
    pub fn build(params: AnnulusParams) -> Result<Self> {
        let o_coa = build_coa_kernel(&params)?;
        let w_a = build_weight_kernel(&params)?;
        let c_rcc = compose_from(&o_coa, &params)?;
        Ok(Self { o_coa, w_a, c_rcc, params })
    }
}

/// Correlation output and its two unnormalized terms.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSurface {
    pub co: Surface,
    /// `I (*) c_rcc`
    pub gradient_term: Surface,
    /// `(255 - I) (*) W_A`
    pub intensity_term: Surface,
    /// Border excluded from normalization statistics and peak search.
    pub margin: usize,
}

/// Computes `CO = lambda * norm(I (*) c_rcc) + (1 - lambda) * norm(W)`.
///
/// Both terms are min-max normalized using their range over the interior
/// (`margin` away from the border); zero padding makes the border values
/// meaningless.
pub fn correlation_output(roi: &GrayImage, ks: &KernelSet, mode: ConvMode) -> Result<CorrelationSurface> {
    let p = &ks.params;
    let margin = p.margin();
    let side = ks.c_rcc.size();
    let (w, h) = (roi.width(), roi.height());
    if w < side || h < side || w <= 2 * margin || h <= 2 * margin {
        return Err(Error::Dimension(format!("ROI {w}x{h} too small for kernel side {side}")));
    }
    let (gradient_term, dark_response) = convolve2d_pair(roi.as_surface(), &ks.c_rcc, &ks.w_a, mode)?;
    // (255 - I) (*) W_A = 255 * (1 (*) W_A) - I (*) W_A under zero padding
    let ones = constant_response(w, h, &ks.w_a);
    let intensity_term = Surface::from_fn(w, h, |x, y| 255.0 * ones.get(x, y) - dark_response.get(x, y));

    let g = interior_normalizer(&gradient_term, margin);
    let i = interior_normalizer(&intensity_term, margin);
    let lambda = p.lambda;
    let co = Surface::from_fn(w, h, |x, y| {
        lambda * g(gradient_term.get(x, y)) + (1.0 - lambda) * i(intensity_term.get(x, y))
    });
    Ok(CorrelationSurface { co, gradient_term, intensity_term, margin })
}

/// Response of a constant unit image to `k`, via a summed-area table of `k`.
fn constant_response(w: usize, h: usize, k: &Kernel2D) -> Surface {
    let s = k.size();
    let a = k.anchor() as isize;
    let mut sat = alloc::vec![0.0; (s + 1) * (s + 1)];
    for j in 0..s {
        for i in 0..s {
            sat[(j + 1) * (s + 1) + i + 1] =
                k.data()[j * s + i] + sat[j * (s + 1) + i + 1] + sat[(j + 1) * (s + 1) + i] - sat[j * (s + 1) + i];
        }
    }
    let rect = |i0: usize, j0: usize, i1: usize, j1: usize| {
        sat[j1 * (s + 1) + i1] - sat[j0 * (s + 1) + i1] - sat[j1 * (s + 1) + i0] + sat[j0 * (s + 1) + i0]
    };
    Surface::from_fn(w, h, |x, y| {
        // offsets m with 0 <= x - m < w, as kernel column indices m + a
        let (x, y) = (x as isize, y as isize);
        let m_lo = (-a).max(x - w as isize + 1);
        let m_hi = a.min(x);
        let n_lo = (-a).max(y - h as isize + 1);
        let n_hi = a.min(y);
        if m_lo > m_hi || n_lo > n_hi {
            return 0.0;
        }
        rect((m_lo + a) as usize, (n_lo + a) as usize, (m_hi + a + 1) as usize, (n_hi + a + 1) as usize)
    })
}

fn interior_normalizer(s: &Surface, margin: usize) -> impl Fn(f64) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for y in margin..s.height() - margin {
        for x in margin..s.width() - margin {
            let v = s.get(x, y);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let range = hi - lo;
    // flat up to round-off: every pixel maps to 0
    let flat = !(range > 1e-9 * hi.abs().max(lo.abs()).max(1.0));
    move |v| if flat { 0.0 } else { (v - lo) / range }
}

/// Local maximum of the correlation output with its confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeakCandidate {
    pub position: Point2,
    pub co_value: f64,
    pub psr: f64,
}

/// `(CO_max - mean) / std` over the 11x11 window around `at`, centre
/// excluded. A window with std below `1e-9` scores 0.
pub fn psr(cs: &CorrelationSurface, at: (usize, usize)) -> Result<f64> {
    psr_on(&cs.co, at)
}

pub(crate) fn psr_on(s: &Surface, (px, py): (usize, usize)) -> Result<f64> {
    let r = PSR_WINDOW / 2;
    if px < r || py < r || px + r >= s.width() || py + r >= s.height() {
        return Err(Error::Bounds(format!("PSR window at ({px}, {py}) leaves the surface")));
    }
    let peak = s.get(px, py);
    let (mut sum, mut sum_sq, mut count) = (0.0, 0.0, 0.0);
    for y in py - r..=py + r {
        for x in px - r..=px + r {
            if x == px && y == py {
                continue;
            }
            let v = s.get(x, y);
            sum += v;
            sum_sq += v * v;
            count += 1.0;
        }
    }
    let mean = sum / count;
    // two-pass variance for accuracy
    let mut var = 0.0;
    for y in py - r..=py + r {
        for x in px - r..=px + r {
            if x == px && y == py {
                continue;
            }
            let d = s.get(x, y) - mean;
            var += d * d;
        }
    }
    let _ = sum_sq;
    let sigma = (var / count).sqrt();
    if sigma < 1e-9 {
        return Ok(0.0);
    }
    Ok((peak - mean) / sigma)
}

/// Top-`k` strict 8-neighbour local maxima (by CO value) away from the
/// border margin, each scored by PSR, sorted by PSR, then CO value, then
/// scan order.
pub fn find_candidates(cs: &CorrelationSurface, k: usize) -> Vec<PeakCandidate> {
    let s = &cs.co;
    let margin = cs.margin.max(PSR_WINDOW / 2);
    if k == 0 || s.width() <= 2 * margin || s.height() <= 2 * margin {
        return Vec::new();
    }
    let mut maxima: Vec<(usize, f64, usize, usize)> = Vec::new();
    for y in margin..s.height() - margin {
        for x in margin..s.width() - margin {
            let v = s.get(x, y);
            let strict = (-1isize..=1).all(|dy| {
                (-1isize..=1)
                    .all(|dx| (dx == 0 && dy == 0) || s.get((x as isize + dx) as usize, (y as isize + dy) as usize) < v)
            });
            if strict {
                maxima.push((y * s.width() + x, v, x, y));
            }
        }
    }
    maxima.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    maxima.truncate(k);
    let mut out: Vec<(usize, PeakCandidate)> = maxima
        .into_iter()
        .filter_map(|(order, v, x, y)| {
            let score = psr_on(s, (x, y)).ok()?;
            Some((order, PeakCandidate { position: Point2::new(x as f64, y as f64), co_value: v, psr: score }))
        })
        .collect();
    out.sort_by(|(ia, a), (ib, b)| {
        b.psr
            .partial_cmp(&a.psr)
            .unwrap_or(Ordering::Equal)
            .then(b.co_value.partial_cmp(&a.co_value).unwrap_or(Ordering::Equal))
            .then(ia.cmp(ib))
    });
    out.into_iter().map(|(_, c)| c).collect()
}

/// Face-width ratios giving the iris radius range.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FaceRatios {
    pub rho_min: f64,
    pub rho_max: f64,
}

impl Default for FaceRatios {
    fn default() -> Self {
        Self { rho_min: 1.0 / 25.0, rho_max: 1.0 / 12.0 }
    }
}

/// `(round(W * rho_min), round(W * rho_max))` for face width `W`.
pub fn radius_range_from_face(face_width: f64, ratios: FaceRatios) -> Result<(f64, f64)> {
    if !(face_width > 0.0) {
        return Err(Error::Config(format!("face width must be positive, got {face_width}")));
    }
    let r_min = (face_width * ratios.rho_min).round();
    let r_max = (face_width * ratios.rho_max).round();
    if r_min < 2.0 {
        return Err(Error::Config(format!("face width {face_width} gives r_min {r_min} < 2")));
    }
    if r_max <= r_min {
        return Err(Error::Config(format!("face width {face_width} gives empty radius range")));
    }
    Ok((r_min, r_max))
}

/// Default fraction of the strongest candidate's CO value a candidate must
/// reach to compete on PSR.
pub const DEFAULT_RELATIVE_FLOOR: f64 = 0.75;

/// Full coarse stage: the PSR-best of the top `k` local maxima, or `None`
/// when the surface has no interior maximum.
pub fn coarse_ic(roi: &GrayImage, ks: &KernelSet, k: usize, mode: ConvMode) -> Result<Option<PeakCandidate>> {
    coarse_ic_with_floor(roi, ks, k, DEFAULT_RELATIVE_FLOOR, mode)
}

/// As [`coarse_ic`], dropping candidates whose CO value is below
/// `relative_floor` times the strongest one before the PSR comparison.
pub fn coarse_ic_with_floor(
    roi: &GrayImage,
    ks: &KernelSet,
    k: usize,
    relative_floor: f64,
    mode: ConvMode,
) -> Result<Option<PeakCandidate>> {
    let cs = correlation_output(roi, ks, mode)?;
    Ok(select_candidate(&find_candidates(&cs, k), relative_floor))
}

/// PSR-best candidate among those within `relative_floor` of the top CO value.
pub fn select_candidate(candidates: &[PeakCandidate], relative_floor: f64) -> Option<PeakCandidate> {
    let top = candidates.iter().map(|c| c.co_value).fold(f64::NEG_INFINITY, f64::max);
    // candidates arrive sorted by PSR, so the first survivor wins
    candidates.iter().find(|c| c.co_value >= relative_floor * top).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{convolve2d, scharr_gradients};
    use crate::testutil::{disc_image, max_abs_diff, noise_image};

    fn params(r_min: f64, r_max: f64, beta: f64, lambda: f64) -> AnnulusParams {
        AnnulusParams::new(r_min, r_max, beta, lambda).unwrap()
    }

    #[test]
    fn coa_values() {
        let k = build_coa_kernel(&params(4.0, 6.0, 2.0, 0.95)).unwrap();
        let (re, im) = k.value(3, 4);
        assert!((re - 0.12).abs() < 1e-15 && (im - 0.16).abs() < 1e-15);
        assert_eq!(k.value(0, 0), (0.0, 0.0));
        for n in -6..=6 {
            for m in -6..=6 {
                let (a, b) = k.value(m, n);
                let (c, d) = k.value(-m, -n);
                assert_eq!((a, b), (-c, -d));
                if a != 0.0 || b != 0.0 {
                    let r = ((m * m + n * n) as f64).sqrt();
                    assert!((a.hypot(b) - 1.0 / r).abs() < 1e-12);
                    assert!((b.atan2(a) - (n as f64).atan2(m as f64)).abs() < 1e-12);
                }
            }
        }
        assert_eq!(k.re.size(), 2 * 6 + 3);
    }

    #[test]
    fn weight_values() {
        let w = build_weight_kernel(&params(4.0, 6.0, 2.0, 0.95)).unwrap();
        assert!((w.at(3, 4) - 0.2).abs() < 1e-15);
        assert_eq!(w.at(6, 0), 0.0);
        assert_eq!(w.at(0, 0), 1.0);
    }

    #[test]
    fn invalid_params() {
        assert!(AnnulusParams::new(5.0, 4.0, 2.0, 0.5).is_err());
        assert!(AnnulusParams::new(0.0, 4.0, 2.0, 0.5).is_err());
        assert!(AnnulusParams::new(2.0, 4.0, 0.0, 0.5).is_err());
        assert!(AnnulusParams::new(2.0, 4.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn composed_kernel_equals_staged_gradients() {
        let p = params(5.0, 9.0, 2.0, 0.95);
        let ks = KernelSet::build(p).unwrap();
        let img = noise_image(64, 64, 99);
        let single = convolve2d(img.as_surface(), &ks.c_rcc, ConvMode::Spatial).unwrap();
        // staged: image (*) Sx, then (*) Re(O), with true convolutions
        let sx = convolve2d(img.as_surface(), &scharr_x(), ConvMode::Spatial).unwrap();
        let sy = convolve2d(img.as_surface(), &scharr_y(), ConvMode::Spatial).unwrap();
        let a = convolve2d(&sx, &ks.o_coa.re, ConvMode::Spatial).unwrap();
        let b = convolve2d(&sy, &ks.o_coa.im, ConvMode::Spatial).unwrap();
        let margin = ks.c_rcc.size() / 2 + 1;
        let mut worst = 0.0f64;
        for y in margin..64 - margin {
            for x in margin..64 - margin {
                let staged = p.beta * a.get(x, y) + b.get(x, y) / p.beta;
                worst = worst.max((staged - single.get(x, y)).abs());
            }
        }
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn composed_kernel_flat_response() {
        let ks = KernelSet::build(params(3.0, 6.0, 2.0, 0.95)).unwrap();
        assert!(ks.c_rcc.sum().abs() < 1e-12);
        let img = GrayImage::filled(30, 30, 128.0);
        let out = convolve2d(img.as_surface(), &ks.c_rcc, ConvMode::Spatial).unwrap();
        let m = ks.c_rcc.size() / 2;
        for y in m..30 - m {
            for x in m..30 - m {
                assert!(out.get(x, y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn composed_kernel_peaks_at_disc_centre() {
        let p = params(6.0, 10.0, 1.0, 1.0);
        let ks = KernelSet::build(p).unwrap();
        let img = disc_image(48, 48, Point2::new(24.0, 24.0), 8.0, 40.0, 200.0);
        let out = convolve2d(img.as_surface(), &ks.c_rcc, ConvMode::Spatial).unwrap();
        assert_eq!(argmax(&out, 11), (24, 24));
    }

    fn argmax(s: &Surface, margin: usize) -> (usize, usize) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for y in margin..s.height() - margin {
            for x in margin..s.width() - margin {
                if s.get(x, y) > best.2 {
                    best = (x, y, s.get(x, y));
                }
            }
        }
        (best.0, best.1)
    }

    #[test]
    fn lambda_mixing() {
        let img = disc_image(56, 50, Point2::new(27.0, 24.0), 8.0, 40.0, 200.0);
        let ks1 = KernelSet::build(params(5.0, 11.0, 2.0, 1.0)).unwrap();
        let cs = correlation_output(&img, &ks1, ConvMode::Spatial).unwrap();
        // lambda = 1: CO is the normalized gradient term alone
        let g = interior_normalizer(&cs.gradient_term, cs.margin);
        for (i, v) in cs.co.data().iter().enumerate() {
            assert!((v - g(cs.gradient_term.data()[i])).abs() < 1e-12);
        }
        let ks0 = KernelSet::build(params(5.0, 11.0, 2.0, 0.0)).unwrap();
        let cs0 = correlation_output(&img, &ks0, ConvMode::Spatial).unwrap();
        assert_eq!(argmax(&cs0.co, cs0.margin), (27, 24));
    }

    #[test]
    fn illumination_offset() {
        let a = disc_image(50, 50, Point2::new(25.0, 25.0), 8.0, 40.0, 180.0);
        let b = GrayImage::from_fn(50, 50, |x, y| a.get(x, y) + 20.0);
        let ks = KernelSet::build(params(5.0, 11.0, 2.0, 0.95)).unwrap();
        let ca = correlation_output(&a, &ks, ConvMode::Fft).unwrap();
        let cb = correlation_output(&b, &ks, ConvMode::Fft).unwrap();
        let m = ks.c_rcc.size() / 2;
        for y in m..50 - m {
            for x in m..50 - m {
                assert!((ca.gradient_term.get(x, y) - cb.gradient_term.get(x, y)).abs() < 1e-6);
            }
        }
        assert!((ca.intensity_term.get(25, 25) - cb.intensity_term.get(25, 25)).abs() > 1.0);
    }

    #[test]
    fn fft_and_spatial_correlation_agree() {
        let img = disc_image(60, 52, Point2::new(30.0, 26.0), 9.0, 50.0, 190.0);
        let ks = KernelSet::build(params(6.0, 12.0, 2.0, 0.95)).unwrap();
        let a = correlation_output(&img, &ks, ConvMode::Fft).unwrap();
        let b = correlation_output(&img, &ks, ConvMode::Spatial).unwrap();
        assert!(max_abs_diff(&a.gradient_term, &b.gradient_term) < 1e-6);
        assert!(max_abs_diff(&a.intensity_term, &b.intensity_term) < 1e-6);
    }

    fn surface_cs(co: Surface, margin: usize) -> CorrelationSurface {
        let (w, h) = (co.width(), co.height());
        CorrelationSurface { co, gradient_term: Surface::zeros(w, h), intensity_term: Surface::zeros(w, h), margin }
    }

    #[test]
    fn psr_substitution() {
        // 120 neighbours: half 0, half 4 (mean 2, std 2), peak 12
        let mut s = Surface::zeros(11, 11);
        let mut toggle = false;
        for y in 0..11 {
            for x in 0..11 {
                if (x, y) == (5, 5) {
                    s.set(x, y, 12.0);
                } else {
                    s.set(x, y, if toggle { 4.0 } else { 0.0 });
                    toggle = !toggle;
                }
            }
        }
        let cs = surface_cs(s.clone(), 5);
        assert!((psr(&cs, (5, 5)).unwrap() - 5.0).abs() < 1e-12);
        let affine = surface_cs(s.map(|v| 3.0 * v + 7.0), 5);
        assert!((psr(&affine, (5, 5)).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(psr(&surface_cs(Surface::filled(11, 11, 3.0), 5), (5, 5)).unwrap(), 0.0);
        assert!(matches!(psr(&cs, (4, 5)), Err(Error::Bounds(_))));
    }

    #[test]
    fn candidates_on_simple_surfaces() {
        let mut s = Surface::zeros(30, 30);
        s.set(14, 17, 1.0);
        let c = find_candidates(&surface_cs(s, 6), 5);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].position, Point2::new(14.0, 17.0));

        assert!(find_candidates(&surface_cs(Surface::filled(30, 30, 2.0), 6), 5).is_empty());

        // two identical Gaussian bumps: identical PSR and value, scan order wins
        let bump = |x: usize, y: usize, cx: f64, cy: f64| {
            let d = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            (-d / 4.0).exp()
        };
        let two = Surface::from_fn(40, 30, |x, y| bump(x, y, 12.0, 15.0) + bump(x, y, 28.0, 15.0));
        let c = find_candidates(&surface_cs(two, 6), 5);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].position, Point2::new(12.0, 15.0));
        assert_eq!(c[1].position, Point2::new(28.0, 15.0));
        assert!((c[0].psr - c[1].psr).abs() < 1e-12);

        // a sharper second bump wins on PSR despite equal height
        let sharp = |x: usize, y: usize| {
            let d = (x as f64 - 28.0).powi(2) + (y as f64 - 15.0).powi(2);
            (-d / 1.0).exp()
        };
        let mixed = Surface::from_fn(40, 30, |x, y| bump(x, y, 12.0, 15.0) + sharp(x, y));
        let c = find_candidates(&surface_cs(mixed, 6), 5);
        assert_eq!(c[0].position, Point2::new(28.0, 15.0));
    }

    #[test]
    fn radius_ranges() {
        let r = FaceRatios::default();
        assert_eq!(radius_range_from_face(250.0, r).unwrap(), (10.0, 21.0));
        assert_eq!(radius_range_from_face(120.0, r).unwrap(), (5.0, 10.0));
        assert!(radius_range_from_face(30.0, r).is_err());
        assert!(radius_range_from_face(-1.0, r).is_err());
    }

    #[test]
    fn coarse_on_clean_disc() {
        let img = disc_image(64, 56, Point2::new(31.0, 27.0), 8.0, 50.0, 200.0);
        let ks = KernelSet::build(params(5.0, 12.0, 2.0, 0.95)).unwrap();
        let c = coarse_ic(&img, &ks, DEFAULT_CANDIDATES, ConvMode::Auto).unwrap().unwrap();
        assert!(c.position.distance(Point2::new(31.0, 27.0)) <= 1.0, "{:?}", c);
    }

    #[test]
    fn coarse_with_eyelid_occlusion() {
        let centre = Point2::new(31.0, 27.0);
        let r = 8.0;
        let disc = disc_image(64, 56, centre, r, 50.0, 200.0);
        // top 40% of the iris hidden behind a flat lid of sclera brightness
        let lid = centre.y - r + 0.4 * 2.0 * r;
        let img = GrayImage::from_fn(64, 56, |x, y| if (y as f64) < lid - 0.5 { 200.0 } else { disc.get(x, y) });
        let ks = KernelSet::build(params(5.0, 12.0, 2.0, 0.95)).unwrap();
        let c = coarse_ic(&img, &ks, DEFAULT_CANDIDATES, ConvMode::Auto).unwrap().unwrap();
        assert!(c.position.distance(centre) <= 2.0, "{:?}", c);
    }

    #[test]
    fn coarse_on_blank_roi() {
        let img = GrayImage::filled(64, 56, 120.0);
        let ks = KernelSet::build(params(5.0, 12.0, 2.0, 0.95)).unwrap();
        assert_eq!(coarse_ic(&img, &ks, DEFAULT_CANDIDATES, ConvMode::Fft).unwrap(), None);
        assert_eq!(coarse_ic(&img, &ks, DEFAULT_CANDIDATES, ConvMode::Spatial).unwrap(), None);
    }

    #[test]
    fn roi_too_small() {
        let img = GrayImage::filled(20, 20, 120.0);
        let ks = KernelSet::build(params(5.0, 12.0, 2.0, 0.95)).unwrap();
        assert!(matches!(correlation_output(&img, &ks, ConvMode::Auto), Err(Error::Dimension(_))));
    }

    #[test]
    fn unused_gradients_helper_compiles() {
        let img = GrayImage::filled(5, 5, 1.0);
        assert!(scharr_gradients(&img).is_ok());
    }
}
