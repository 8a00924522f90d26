//! Thin wrappers around `rustfft` for the convolution-style products used by
//! the Toeplitz routines.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) fn forward(buf: &mut [Complex64]) {
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

/// Fourier coefficients `ĥ(j) = (1/G) Σ_k h(2πk/G) e^{-ijθ_k}` of equispaced
/// samples, returned in FFT order (negative frequencies at the top).
pub(crate) fn fourier_coefficients(samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(&mut buf);
    let s = 1.0 / samples.len() as f64;
    for v in buf.iter_mut() {
        *v *= s;
    }
    buf
}

/// Product with the `n × n` lower-triangular Toeplitz matrix whose first
/// column is `col`, and with its transpose.
#[derive(Clone)]
pub(crate) struct LowerToeplitz {
    n: usize,
    spectrum: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl LowerToeplitz {
    pub(crate) fn new(col: &[Complex64]) -> Self {
        let n = col.len();
        let size = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let mut spectrum = vec![Complex64::new(0.0, 0.0); size];
        spectrum[..n].copy_from_slice(col);
        fwd.process(&mut spectrum);
        let s = 1.0 / size as f64;
        for v in spectrum.iter_mut() {
            *v *= s;
        }
        LowerToeplitz { n, spectrum, fwd, inv }
    }

    pub(crate) fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.spectrum.len()];
        buf[..self.n].copy_from_slice(x);
        self.fwd.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inv.process(&mut buf);
        buf.truncate(self.n);
        buf
    }

    /// `Lᵀ x`, computed as `J L J x` with `J` the reversal.
    pub(crate) fn apply_transpose(&self, x: &[Complex64]) -> Vec<Complex64> {
        let rev: Vec<Complex64> = x.iter().rev().copied().collect();
        let mut y = self.apply(&rev);
        y.reverse();
        y
    }
}

/// Full Toeplitz product `T x` with `T_{k,l} = t(l-k)` via circulant embedding.
#[derive(Clone)]
pub(crate) struct CirculantEmbedding {
    n: usize,
    spectrum: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl CirculantEmbedding {
    /// `t` maps a lag in `-(n-1)..=(n-1)` to the Toeplitz coefficient.
    pub(crate) fn new<F: Fn(i64) -> Complex64>(n: usize, t: F) -> Self {
        let size = (2 * n).next_power_of_two().max(2);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let mut c = vec![Complex64::new(0.0, 0.0); size];
        for j in 0..n {
            c[j] = t(-(j as i64));
            if j > 0 {
                c[size - j] = t(j as i64);
            }
        }
        fwd.process(&mut c);
        let s = 1.0 / size as f64;
        for v in c.iter_mut() {
            *v *= s;
        }
        CirculantEmbedding { n, spectrum: c, fwd, inv }
    }

    pub(crate) fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.spectrum.len()];
        buf[..self.n].copy_from_slice(x);
        self.fwd.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inv.process(&mut buf);
        buf.truncate(self.n);
        buf
    }
}
