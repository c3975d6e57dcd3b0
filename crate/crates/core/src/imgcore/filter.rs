//! Separable smoothing.

use alloc::vec::Vec;

use super::Surface;

/// Separable Gaussian blur with mirrored borders; `sigma <= 0` is a no-op.
pub fn gaussian_blur(img: &Surface, sigma: f64) -> Surface {
    if !(sigma > 0.0) || img.width() == 0 || img.height() == 0 {
        return img.clone();
    }
    let r = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mirror = |i: isize, n: isize| {
        if n == 1 {
            return 0;
        }
        let p = 2 * (n - 1);
        let m = i.rem_euclid(p);
        (if m >= n { p - m } else { m }) as usize
    };
    let horiz = Surface::from_fn(img.width(), img.height(), |x, y| {
        taps.iter().enumerate().map(|(k, t)| t * img.get(mirror(x as isize + k as isize - r, w), y)).sum()
    });
    Surface::from_fn(img.width(), img.height(), |x, y| {
        taps.iter().enumerate().map(|(k, t)| t * horiz.get(x, mirror(y as isize + k as isize - r, h))).sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_constant_and_mass() {
        let flat = Surface::filled(9, 7, 42.0);
        let b = gaussian_blur(&flat, 1.3);
        assert!(b.data().iter().all(|v| (v - 42.0).abs() < 1e-12));
        let mut spike = Surface::zeros(31, 31);
        spike.set(15, 15, 1.0);
        let b = gaussian_blur(&spike, 1.0);
        assert!((b.data().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(b.get(15, 15) > b.get(16, 15));
        assert_eq!(gaussian_blur(&spike, 0.0), spike);
    }
}
