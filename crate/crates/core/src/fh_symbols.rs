//! Fisher–Hartwig symbols `φ_α(θ) = |1 − e^{iθ}|^{2α} c₁(θ)`, their Fourier
//! coefficients, the coefficients of `1/φ_α`, and the coefficients of the
//! inverse outer factor.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::special::{gamma, ln_gamma_ratio, rgamma};

const MIN_POSITIVITY_SAMPLES: usize = 4096;
const MAX_PURE_INDEX: u64 = 1_000_000;

/// Exponent `α` and the regular factor `c₁` given by its trigonometric
/// polynomial coefficients `ĉ₁(−d..=d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSpec {
    alpha: f64,
    c1: Vec<Complex64>,
}

impl SymbolSpec {
    /// Validates `0 ≤ α ≤ 1/2`, Hermitian symmetry of the coefficients and
    /// strict positivity of `c₁` on a dense sampling of the circle.
    pub fn new(alpha: f64, c1: Vec<Complex64>) -> Result<Self> {
        if !(0.0..=0.5).contains(&alpha) {
            return Err(Error::Domain(format!("alpha = {alpha} outside [0, 1/2]")));
        }
        if c1.len().is_multiple_of(2) {
            return Err(Error::InvalidSymbol(format!(
                "c1 needs an odd number of coefficients (indices -d..d), got {}",
                c1.len()
            )));
        }
        if c1.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidSymbol("non-finite c1 coefficient".into()));
        }
        let d = c1.len() / 2;
        let scale = c1.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for j in 0..=d {
            if (c1[d + j] - c1[d - j].conj()).norm() > 1e-12 * scale {
                return Err(Error::InvalidSymbol(format!("c1 is not real-valued: coefficient pair ±{j} not conjugate")));
            }
        }
        let spec = SymbolSpec { alpha, c1 };
        let samples = (8 * (d + 1)).max(MIN_POSITIVITY_SAMPLES).next_power_of_two();
        for k in 0..samples {
            let theta = 2.0 * PI * k as f64 / samples as f64;
            let v = spec.c1_eval(theta);
            if !(v > 0.0) {
                return Err(Error::InvalidSymbol(format!("c1 is not positive: c1({theta:.6}) = {v:e}")));
            }
        }
        Ok(spec)
    }

    /// `c₁ = 1`.
    pub fn one(alpha: f64) -> Result<Self> {
        Self::new(alpha, vec![Complex64::new(1.0, 0.0)])
    }

    /// `c₁ = 2 + cos θ`.
    pub fn shifted_cos(alpha: f64) -> Result<Self> {
        let h = Complex64::new(0.5, 0.0);
        Self::new(alpha, vec![h, Complex64::new(2.0, 0.0), h])
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.c1.clone())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn degree(&self) -> usize {
        self.c1.len() / 2
    }

    /// `ĉ₁(j)`, zero outside the support.
    pub fn c1_coeff(&self, j: i64) -> Complex64 {
        let d = self.degree() as i64;
        if j.abs() > d {
            Complex64::new(0.0, 0.0)
        } else {
            self.c1[(j + d) as usize]
        }
    }

    pub fn c1_coeffs(&self) -> &[Complex64] {
        &self.c1
    }

    pub fn c1_eval(&self, theta: f64) -> f64 {
        let d = self.degree() as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in -d..=d {
            acc += self.c1_coeff(j) * Complex64::from_polar(1.0, j as f64 * theta);
        }
        acc.re
    }

    pub fn c1_at_one(&self) -> f64 {
        self.c1.iter().map(|z| z.re).sum()
    }

    /// `φ_α(e^{iθ})`.
    pub fn eval(&self, theta: f64) -> f64 {
        let s = 2.0 - 2.0 * theta.cos();
        let pure = if self.alpha == 0.0 { 1.0 } else { s.powf(self.alpha) };
        pure * self.c1_eval(theta)
    }

    pub fn is_even(&self) -> bool {
        self.c1.iter().all(|z| z.im == 0.0)
    }
}

/// Coefficients `ĉ(−d..=d)` of a random strictly positive trigonometric
/// polynomial `|q(e^{iθ})|² + floor` with complex Gaussian-like `q`.
pub fn random_regular_factor<R: rand::Rng>(rng: &mut R, degree: usize, floor: f64) -> Vec<Complex64> {
    let q: Vec<Complex64> = (0..=degree)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mut c = vec![Complex64::new(0.0, 0.0); 2 * degree + 1];
    for j in 0..=degree {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..=degree - j {
            acc += q[i + j] * q[i].conj();
        }
        c[degree + j] = acc;
        c[degree - j] = acc.conj();
    }
    c[degree] += floor;
    c
}

/// Fourier coefficients `ĥ(−M..=M)` of a circle function.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierTable {
    half_width: usize,
    coeffs: Vec<Complex64>,
    hermitian: bool,
}

impl FourierTable {
    pub fn new(coeffs: Vec<Complex64>, hermitian: bool) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::Dimension { expected: coeffs.len() + 1, got: coeffs.len() });
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("non-finite Fourier coefficient".into()));
        }
        Ok(FourierTable { half_width: coeffs.len() / 2, coeffs, hermitian })
    }

    /// Table of a real function from its nonnegative-index coefficients.
    pub fn from_hermitian_half(half: &[Complex64]) -> Result<Self> {
        let m = half.len().saturating_sub(1);
        let mut coeffs = Vec::with_capacity(2 * m + 1);
        coeffs.extend(half[1..].iter().rev().map(|z| z.conj()));
        coeffs.extend_from_slice(half);
        Self::new(coeffs, true)
    }

    /// The constant function 1.
    pub fn delta(half_width: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * half_width + 1];
        coeffs[half_width] = Complex64::new(1.0, 0.0);
        FourierTable { half_width, coeffs, hermitian: true }
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `ĥ(n)` for `|n| ≤ M`.
    pub fn get(&self, n: i64) -> Complex64 {
        let m = self.half_width as i64;
        assert!(n.abs() <= m, "Fourier index {n} outside table of half-width {m}");
        self.coeffs[(n + m) as usize]
    }

    /// Coefficients for indices `−M..=M` in order.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Largest deviation from `ĥ(−n) = conj(ĥ(n))`.
    pub fn hermitian_defect(&self) -> f64 {
        let m = self.half_width as i64;
        (0..=m).map(|n| (self.get(-n) - self.get(n).conj()).norm()).fold(0.0, f64::max)
    }
}

/// Fourier coefficient of order `n` of `(2 − 2cos θ)^α`:
/// `(−1)^n Γ(2α+1) / (Γ(α+n+1) Γ(α−n+1))`.
pub fn fourier_fh_pure(alpha: f64, n: i64) -> Result<f64> {
    if !(alpha > -0.5) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha = {alpha} must exceed -1/2")));
    }
    let n = n.unsigned_abs();
    if n > MAX_PURE_INDEX {
        return Err(Error::Domain(format!("index {n} exceeds {MAX_PURE_INDEX}")));
    }
    if alpha == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let g = gamma(2.0 * alpha + 1.0);
    if n == 0 {
        let r = rgamma(alpha + 1.0);
        return Ok(g * r * r);
    }
    let nf = n as f64;
    if nf > alpha && alpha.fract() != 0.0 {
        // Reflection of 1/Γ(α−n+1) gives −Γ(2α+1) sin(πα)/π · Γ(n−α)/Γ(n+α+1).
        let ratio = ln_gamma_ratio(nf, -alpha, alpha + 1.0).exp();
        Ok(-g * (PI * alpha).sin() / PI * ratio)
    } else {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        Ok(sign * g * rgamma(alpha + nf + 1.0) * rgamma(alpha - nf + 1.0))
    }
}

fn pure_table(alpha: f64, half_width: usize) -> Result<Vec<f64>> {
    (0..=half_width as i64).map(|n| fourier_fh_pure(alpha, n)).collect()
}

/// Convolution of an even real sequence (given for `n ≥ 0`) with a short
/// Hermitian sequence `reg(−d..=d)`; the negative half is mirrored so the
/// result is exactly Hermitian.
fn convolve_even(pure: &[f64], reg: &[Complex64], half_width: usize) -> Vec<Complex64> {
    let d = reg.len() / 2;
    let half: Vec<Complex64> = (0..=half_width as i64)
        .map(|n| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, r) in reg.iter().enumerate() {
                let j = idx as i64 - d as i64;
                acc += r * pure[(n - j).unsigned_abs() as usize];
            }
            acc
        })
        .collect();
    let mut out: Vec<Complex64> = half[1..].iter().rev().map(|z| z.conj()).collect();
    out.extend_from_slice(&half);
    out
}

/// `φ̂_α(−M..=M)` as the convolution of the closed-form singular
/// coefficients with `ĉ₁`.
pub fn fourier_of_symbol(spec: &SymbolSpec, half_width: usize) -> Result<FourierTable> {
    let d = spec.degree();
    if half_width < d {
        return Err(Error::Domain(format!("half-width {half_width} below the degree {d} of c1")));
    }
    let pure = pure_table(spec.alpha, half_width + d)?;
    FourierTable::new(convolve_even(&pure, spec.c1_coeffs(), half_width), true)
}

/// Trapezoid grid size used for transforms of the regular factor.
fn regular_grid(half_width: usize) -> usize {
    (64 * half_width.max(1)).max(4096).next_power_of_two()
}

/// Coefficients `r̂(−J..=J)` of `1/c₁`, truncated where they fall below
/// double-precision relevance.
fn inverse_regular_coeffs(spec: &SymbolSpec, half_width: usize) -> Vec<Complex64> {
    if spec.degree() == 0 {
        return vec![Complex64::new(1.0 / spec.c1_coeff(0).re, 0.0)];
    }
    let g = regular_grid(half_width);
    let samples: Vec<f64> = (0..g).map(|k| 1.0 / spec.c1_eval(2.0 * PI * k as f64 / g as f64)).collect();
    let hat = fft::fourier_coefficients(&samples);
    let r0 = hat[0].norm();
    let limit = (g / 2 - 1).min(half_width + 1024);
    let mut j_max = 0;
    for j in 1..=limit {
        if hat[j].norm() > 1e-18 * r0 || hat[g - j].norm() > 1e-18 * r0 {
            j_max = j;
        }
    }
    let mut out = Vec::with_capacity(2 * j_max + 1);
    for j in (1..=j_max).rev() {
        out.push(hat[g - j]);
    }
    out.extend_from_slice(&hat[..=j_max]);
    out
}

/// `(1/φ_α)^(−M..=M)`: closed-form coefficients of `|1 − e^{iθ}|^{−2α}`
/// convolved with the quadrature coefficients of `1/c₁`.
pub fn fourier_of_inverse_symbol(spec: &SymbolSpec, half_width: usize) -> Result<FourierTable> {
    if spec.alpha >= 0.5 {
        return Err(Error::Domain(format!("1/phi needs alpha < 1/2, got {}", spec.alpha)));
    }
    let reg = inverse_regular_coeffs(spec, half_width);
    let j = reg.len() / 2;
    let pure = pure_table(-spec.alpha, half_width + j)?;
    FourierTable::new(convolve_even(&pure, &reg, half_width), true)
}

/// Coefficients `β_u`, `u = 0..=length`, of the inverse outer factor
/// `(1 − z)^{−α} g₁(z)^{−1}`, normalized so that `β₀ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSeries {
    pub alpha: f64,
    pub values: Vec<Complex64>,
    /// `g₁(0)`; multiply `values` by `1/g₁(0)` to recover the unnormalized
    /// coefficients of `g_α^{−1}`.
    pub g1_at_zero: f64,
    pub g1_at_one: Complex64,
}

impl BetaSeries {
    /// Limit of `β_u u^{1−α}` under the `β₀ = 1` normalization:
    /// `g₁(0) / (Γ(α) g₁(1))`.
    pub fn asymptotic_constant(&self) -> Complex64 {
        Complex64::new(self.g1_at_zero * rgamma(self.alpha), 0.0) / self.g1_at_one
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Taylor coefficients `Γ(u+a)/(Γ(a) u!)` of `(1 − z)^{−a}`, `u = 0..=length`.
pub fn binomial_series(a: f64, length: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(length + 1);
    let mut b = 1.0;
    out.push(b);
    for u in 1..=length {
        b *= (u as f64 - 1.0 + a) / u as f64;
        out.push(b);
    }
    out
}

/// Outer-factor data of `c₁`: the coefficients `ℓ̂(n)`, `n ≥ 0`, of `log c₁`
/// that matter at double precision.
struct LogRegular {
    coeffs: Vec<Complex64>,
}

impl LogRegular {
    fn new(spec: &SymbolSpec, length: usize) -> Self {
        if spec.degree() == 0 {
            return LogRegular { coeffs: vec![Complex64::new(spec.c1_coeff(0).re.ln(), 0.0)] };
        }
        let g = (2 * (length + 1)).max(MIN_POSITIVITY_SAMPLES).next_power_of_two();
        let samples: Vec<f64> = (0..g).map(|k| spec.c1_eval(2.0 * PI * k as f64 / g as f64).ln()).collect();
        let hat = fft::fourier_coefficients(&samples);
        let scale = hat[0].norm().max(hat[1].norm()).max(1e-300);
        let mut keep = 1;
        for (n, h) in hat.iter().enumerate().take(g / 2).skip(1) {
            if h.norm() > 1e-18 * scale {
                keep = n + 1;
            }
        }
        LogRegular { coeffs: hat[..keep].to_vec() }
    }

    /// `F(z) = ℓ̂(0)/2 + Σ_{n≥1} ℓ̂(n) z^n`, so that `g₁ = exp F`.
    fn outer_log_at_one(&self) -> Complex64 {
        self.coeffs[0] * 0.5 + self.coeffs[1..].iter().sum::<Complex64>()
    }

    /// Taylor coefficients of `g₁(0)/g₁(z) = exp(−(F(z) − F(0)))`.
    fn normalized_inverse_taylor(&self, length: usize) -> Vec<Complex64> {
        let f: Vec<Complex64> = self.coeffs.iter().map(|c| -c).collect();
        let mut e = vec![Complex64::new(0.0, 0.0); length + 1];
        e[0] = Complex64::new(1.0, 0.0);
        for n in 1..=length {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 1..f.len().min(n + 1) {
                acc += f[k] * e[n - k] * k as f64;
            }
            e[n] = acc / n as f64;
        }
        e
    }
}

/// `g₁(1)`, the outer factor of `c₁` at `z = 1`.
pub fn g1_at_one(spec: &SymbolSpec) -> Complex64 {
    LogRegular::new(spec, 0).outer_log_at_one().exp()
}

/// `β_u^{(α)}` for `u = 0..=length`.
pub fn wiener_hopf_beta(spec: &SymbolSpec, length: usize) -> Result<BetaSeries> {
    beta_series_with_exponent(spec, spec.alpha, length)
}

/// Coefficients of `(1 − z)^{−a} g₁(0)/g₁(z)` for an arbitrary exponent `a`,
/// used for the shifted series `β^{(α+1)}`.
pub fn beta_series_with_exponent(spec: &SymbolSpec, a: f64, length: usize) -> Result<BetaSeries> {
    if length < 1 {
        return Err(Error::Domain("beta series length must be at least 1".into()));
    }
    let binom = binomial_series(a, length);
    let log_reg = LogRegular::new(spec, length);
    let g0 = (log_reg.coeffs[0].re * 0.5).exp();
    let g1 = log_reg.outer_log_at_one().exp();
    let values = if spec.degree() == 0 {
        binom.iter().map(|&b| Complex64::new(b, 0.0)).collect()
    } else {
        let inv = log_reg.normalized_inverse_taylor(length);
        (0..=length)
            .map(|u| {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..=u {
                    acc += inv[u - j] * binom[j];
                }
                acc
            })
            .collect()
    };
    Ok(BetaSeries { alpha: a, values, g1_at_zero: g0, g1_at_one: g1 })
}
