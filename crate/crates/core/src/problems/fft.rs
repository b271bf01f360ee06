//! Minimal radix-2 complex FFT for the spectral semidiscretizations.
//!
//! Desk-scale grids (N <= 1024) need nothing fancier than an iterative
//! Cooley-Tukey transform with precomputed bit-reversal and twiddle
//! tables. The tables are immutable after construction, so a plan can be
//! shared freely across threads.

use crate::{Error, Result};
use num_complex::Complex64;

/// A fixed-size power-of-two FFT plan.
#[derive(Debug, Clone)]
pub struct Radix2Fft {
    n: usize,
    bit_reversed: Vec<usize>,
    /// One table per butterfly stage: `twiddles[s][j] = exp(-i pi j / 2^s)`
    /// for `j < 2^s`.
    twiddles: Vec<Vec<Complex64>>,
}

impl Radix2Fft {
    /// Plans a transform of length `n`, which must be a power of two.
    pub fn new(n: usize) -> Result<Radix2Fft> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidInput {
                message: format!("FFT length {n} is not a power of two"),
            });
        }
        let log2n = n.trailing_zeros();
        let mut bit_reversed = vec![0usize; n];
        for (i, slot) in bit_reversed.iter_mut().enumerate() {
            *slot = i.reverse_bits() >> (usize::BITS - log2n);
        }
        let twiddles = (0..log2n)
            .map(|s| {
                let half = 1usize << s;
                (0..half)
                    .map(|j| {
                        Complex64::from_polar(1.0, -std::f64::consts::PI * j as f64 / half as f64)
                    })
                    .collect()
            })
            .collect();
        Ok(Radix2Fft { n, bit_reversed, twiddles })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform: `X_k = sum_j x_j exp(-2 pi i j k / n)`.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n, "buffer length must match the plan");
        for (i, &j) in self.bit_reversed.iter().enumerate() {
            if i < j {
                data.swap(i, j);
            }
        }
        for (s, table) in self.twiddles.iter().enumerate() {
            let half = 1usize << s;
            let len = half * 2;
            for block in data.chunks_exact_mut(len) {
                let (lo, hi) = block.split_at_mut(half);
                for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(table) {
                    let t = *w * *b;
                    *b = *a - t;
                    *a += t;
                }
            }
        }
    }

    /// In-place inverse transform: `x_j = (1/n) sum_k X_k exp(2 pi i j k / n)`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        for z in data.iter_mut() {
            *z = z.conj();
        }
        self.forward(data);
        let scale = 1.0 / self.n as f64;
        for z in data.iter_mut() {
            *z = z.conj() * scale;
        }
    }
}
