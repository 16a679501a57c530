//! Iterative radix-2 complex FFT with precomputed twiddles.
//!
//! Sizes must be powers of two; the inverse transform is normalized by `1/n`
//! so `inverse(forward(x)) == x` up to rounding.

use alloc::vec::Vec;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    // Twiddles for the forward transform: e^{-2*pi*i*k/n}, k in 0..n/2.
    twiddles: Vec<Complex64>,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 1, "FFT size must be a power of two");
        let twiddles = (0..n / 2)
            .map(|k| {
                let angle = -2.0 * core::f64::consts::PI * k as f64 / n as f64;
                Complex64::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        Fft { n, twiddles }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], invert: bool) {
        let n = self.n;
        assert_eq!(buf.len(), n, "buffer length must equal FFT size");
        if n == 1 {
            return;
        }
        // Bit-reversal permutation.
        let shift = usize::BITS - n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> shift;
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
                    if invert {
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
    }
}

/// Forward real-input FFT returning the `n/2 + 1` nonredundant bins.
pub fn real_forward(fft: &Fft, signal: &[f64]) -> Vec<Complex64> {
    let n = fft.len();
    let mut buf: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(signal.get(i).copied().unwrap_or(0.0), 0.0))
        .collect();
    fft.forward(&mut buf);
    buf.truncate(n / 2 + 1);
    buf
}

/// Inverse of [`real_forward`]: rebuilds the full conjugate-symmetric
/// spectrum and returns the real part.
pub fn real_inverse(fft: &Fft, bins: &[Complex64]) -> Vec<f64> {
    let n = fft.len();
    assert_eq!(bins.len(), n / 2 + 1, "expected n/2 + 1 bins");
    let mut buf = Vec::with_capacity(n);
    buf.extend_from_slice(bins);
    for k in (1..n / 2).rev() {
        buf.push(bins[k].conj());
    }
    fft.inverse(&mut buf);
    buf.iter().map(|c| c.re).collect()
}
