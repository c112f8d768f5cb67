//! Length-`n` forward/inverse DFTs in O(n log n) for arbitrary `n`, prime
//! lengths included.
//!
//! The engine is an iterative radix-2 FFT; lengths that are not powers of
//! two are handled by the Bluestein chirp-z reduction
//! `n*k = (n^2 + k^2 - (k - n)^2) / 2`, which rewrites the DFT as one cyclic
//! convolution of length `M = 2^ceil(log2(2n-1))`.  A [`DftPlan`] caches the
//! quadratic-phase table, the transformed convolution kernel, and the FFT
//! twiddles for its length; plans hold no scratch and can be shared freely
//! across threads.
//!
//! Quadratic phases `exp(±i*pi*j^2/n)` are evaluated after reducing `j^2`
//! mod `2n` in integers, so they are exactly periodic and drift-free.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Sign convention: the forward transform is
/// `X[k] = sum_n x[n] * exp(-2*pi*i*n*k/len)`; the inverse divides by `len`.
pub struct DftPlan {
    len: usize,
    /// `exp(-i*pi*j^2/len)` for `j` in `0..len`.
    quad: Vec<Complex64>,
    /// FFT of the padded reciprocal-chirp kernel (length `m`).
    kernel_fft: Vec<Complex64>,
    /// Twiddles `exp(-2*pi*i*j/m)` for `j` in `0..m/2`.
    twiddles: Vec<Complex64>,
    m: usize,
}

impl DftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "transform length must be positive");
        let m = (2 * len - 1).next_power_of_two();
        let twiddles = pow2_twiddles(m);

        // quad[j] = exp(-i*pi*(j^2 mod 2*len)/len); the mod-2*len reduction
        // happens in u64 so the phase is exact for any j.
        let two_len = 2 * len as u64;
        let quad: Vec<Complex64> = (0..len as u64)
            .map(|j| half_turn_root(-((j * j % two_len) as f64), len))
            .collect();

        // Kernel: conj-chirp at offsets -(len-1)..=(len-1), wrapped into
        // length m.  The chirp is even in j, so both wings share values.
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..len as u64 {
            let c = half_turn_root((j * j % two_len) as f64, len);
            kernel[j as usize] = c;
            if j != 0 {
                kernel[m - j as usize] = c;
            }
        }
        fft_pow2(&mut kernel, &twiddles, false);

        DftPlan {
            len,
            quad,
            kernel_fft: kernel,
            twiddles,
            m,
        }
    }

    /// Transform length this plan was built for.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Forward DFT (negative exponent), no normalization.
    pub fn forward(&self, input: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.len, "input length does not match plan");
        if self.len == 1 {
            return vec![input[0]];
        }
        let mut work = vec![Complex64::new(0.0, 0.0); self.m];
        for j in 0..self.len {
            work[j] = input[j] * self.quad[j];
        }
        fft_pow2(&mut work, &self.twiddles, false);
        for (w, k) in work.iter_mut().zip(self.kernel_fft.iter()) {
            *w *= k;
        }
        fft_pow2(&mut work, &self.twiddles, true);
        let scale = 1.0 / self.m as f64;
        (0..self.len)
            .map(|k| work[k] * self.quad[k] * scale)
            .collect()
    }

    /// Inverse DFT (positive exponent), normalized by `1/len`.
    pub fn inverse(&self, input: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.len, "input length does not match plan");
        let conj_in: Vec<Complex64> = input.iter().map(|v| v.conj()).collect();
        let scale = 1.0 / self.len as f64;
        self.forward(&conj_in)
            .into_iter()
            .map(|v| v.conj() * scale)
            .collect()
    }
}

/// `exp(i*pi*t/len)` for a half-turn exponent `t` already reduced into
/// `(-2*len, 2*len)`.
#[inline]
fn half_turn_root(t: f64, len: usize) -> Complex64 {
    let angle = PI * t / len as f64;
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

fn pow2_twiddles(m: usize) -> Vec<Complex64> {
    debug_assert!(m.is_power_of_two());
    (0..m / 2)
        .map(|j| {
            let angle = -2.0 * PI * j as f64 / m as f64;
            Complex64::new(libm::cos(angle), libm::sin(angle))
        })
        .collect()
}

/// In-place iterative radix-2 FFT over a power-of-two length.  `inverse`
/// conjugates the twiddles but applies no normalization.
fn fft_pow2(values: &mut [Complex64], twiddles: &[Complex64], inverse: bool) {
    let m = values.len();
    debug_assert!(m.is_power_of_two());
    debug_assert_eq!(twiddles.len(), m / 2);
    if m <= 1 {
        return;
    }

    // Bit-reversal permutation.
    let shift = (m.leading_zeros() + 1) as usize;
    for i in 0..m {
        let j = i.reverse_bits() >> shift;
        if i < j {
            values.swap(i, j);
        }
    }

    let mut span = 2;
    while span <= m {
        let half = span / 2;
        let stride = m / span;
        for base in (0..m).step_by(span) {
            for i in 0..half {
                let tw = twiddles[i * stride];
                let tw = if inverse { tw.conj() } else { tw };
                let hi = values[base + half + i] * tw;
                let lo = values[base + i];
                values[base + i] = lo + hi;
                values[base + half + i] = lo - hi;
            }
        }
        span *= 2;
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
