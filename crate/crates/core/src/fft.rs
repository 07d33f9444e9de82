//! Minimal radix-2 FFT used by the spectral loss.
//!
//! The loss only ever needs power-of-two sizes (the FFT length is the next
//! power of two above the analysis window), so an iterative Cooley-Tukey
//! in f64 is all we carry; `rustfft` is not `no_std`.

use num_complex::Complex64;

use crate::math;

pub(crate) fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// In-place forward DFT; `buf.len()` must be a power of two.
pub(crate) fn fft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }

    // Bit-reversal permutation.
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = (i.reverse_bits() >> (usize::BITS - bits)) as usize;
        if j > i {
            buf.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let angle = -2.0 * core::f64::consts::PI / len as f64;
        let w_len = Complex64::new(math::cos(angle), math::sin(angle));
        for chunk in buf.chunks_mut(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let a = chunk[k];
                let b = chunk[k + len / 2] * w;
                chunk[k] = a + b;
                chunk[k + len / 2] = a - b;
                w *= w_len;
            }
        }
        len <<= 1;
    }
}

/// Magnitudes of the non-redundant bins (`0..=n/2`) of the real signal's DFT,
/// zero-padded to `n_fft`.
pub(crate) fn real_magnitudes(signal: &[f64], n_fft: usize, out: &mut [f64]) {
    debug_assert!(n_fft.is_power_of_two() && signal.len() <= n_fft);
    debug_assert_eq!(out.len(), n_fft / 2 + 1);
    let mut buf = alloc::vec![Complex64::new(0.0, 0.0); n_fft];
    for (slot, &v) in buf.iter_mut().zip(signal) {
        slot.re = v;
    }
    fft_in_place(&mut buf);
    for (o, c) in out.iter_mut().zip(buf.iter().take(n_fft / 2 + 1)) {
        *o = math::hypot(c.re, c.im);
    }
}
