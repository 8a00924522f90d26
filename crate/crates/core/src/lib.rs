//! Spectral asymptotics of Hermitian Toeplitz matrices generated by symbols
//! with a Fisher–Hartwig zero, `φ_α(θ) = |1 − e^{iθ}|^{2α} c₁(θ)`.
//!
//! The crate provides the Fourier machinery for such symbols, exact
//! Toeplitz inversion through predictor polynomials, extreme-eigenvalue
//! solvers, the limit kernels that govern the smallest eigenvalue, and
//! convergence-study drivers that compare the two sides.

pub mod error;
mod fft;
pub mod dense;
pub mod experiments;
pub mod fh_symbols;
pub mod kernels;
pub mod quadrature;
pub mod special;
pub mod spectra;
pub mod toeplitz_core;

pub use error::{Error, Result};
