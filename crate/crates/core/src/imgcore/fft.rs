//! Iterative radix-2 FFT over power-of-two lengths, plus a 2-D wrapper.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Twiddle table and bit-reversal permutation for one transform length.
pub(crate) struct Plan {
    n: usize,
    twiddles: Vec<Complex64>,
    rev: Vec<usize>,
}

impl Plan {
    pub(crate) fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "fft length {n} is not a power of two");
        let bits = n.trailing_zeros();
        let rev = (0..n).map(|i| if n == 1 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) }).collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(a.cos(), a.sin())
            })
            .collect();
        Self { n, twiddles, rev }
    }

    pub(crate) fn run(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n);
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * step];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
        if inverse {
            let s = 1.0 / n as f64;
            for v in buf.iter_mut() {
                *v *= s;
            }
        }
    }
}

/// In-place 2-D transform of a row-major `width x height` buffer.
pub(crate) fn fft2d(buf: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    let row_plan = Plan::new(width);
    for row in buf.chunks_exact_mut(width) {
        row_plan.run(row, inverse);
    }
    let col_plan = if height == width { row_plan } else { Plan::new(height) };
    let mut col = vec![Complex64::new(0.0, 0.0); height];
    for x in 0..width {
        for y in 0..height {
            col[y] = buf[y * width + x];
        }
        col_plan.run(&mut col, inverse);
        for y in 0..height {
            buf[y * width + x] = col[y];
        }
    }
}
