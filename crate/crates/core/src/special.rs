//! Gamma-function helpers and the Riemann zeta function on the real line.

use std::f64::consts::PI;

/// `ln|Γ(x)|` together with the sign of `Γ(x)`.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    let (v, s) = libm::lgamma_r(x);
    (v, if s < 0 { -1.0 } else { 1.0 })
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `1/Γ(x)`, returning exactly zero at the poles `x = 0, -1, -2, ...`.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    let (lg, s) = ln_gamma_signed(x);
    s * (-lg).exp()
}

// Bernoulli-number coefficients B_{2k} / (2k (2k-1)) of the Stirling series.
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
];

fn stirling_tail(z: f64) -> f64 {
    let zi = 1.0 / z;
    let z2 = zi * zi;
    let mut acc = 0.0;
    for c in STIRLING.iter().rev() {
        acc = acc * z2 + c;
    }
    acc * zi
}

/// `ln Γ(x + a) − ln Γ(x + b)` for `x + a > 0` and `x + b > 0`.
///
/// For large `x` the difference is formed from the Stirling expansion so
/// that the leading `x ln x` terms cancel analytically instead of in floating
/// point.
pub fn ln_gamma_ratio(x: f64, a: f64, b: f64) -> f64 {
    let z1 = x + a;
    let z2 = x + b;
    debug_assert!(z1 > 0.0 && z2 > 0.0);
    if z1.min(z2) < 20.0 || x < 20.0 {
        return libm::lgamma(z1) - libm::lgamma(z2);
    }
    (a - b) * x.ln() + (z1 - 0.5) * (a / x).ln_1p() - (z2 - 0.5) * (b / x).ln_1p() - (a - b)
        + stirling_tail(z1)
        - stirling_tail(z2)
}

/// Riemann zeta function for real `s != 1`.
///
/// Uses the Borwein acceleration of the alternating eta series for `s > 0`
/// and the functional equation for `s <= 0`.
pub fn zeta(s: f64) -> f64 {
    if s == 1.0 {
        return f64::INFINITY;
    }
    if s < 0.5 && s != 0.0 {
        if s < 0.0 && (s / 2.0) == (s / 2.0).floor() {
            return 0.0;
        }
        // ζ(s) = 2^s π^{s-1} sin(πs/2) Γ(1-s) ζ(1-s)
        return 2f64.powf(s) * PI.powf(s - 1.0) * (PI * s / 2.0).sin() * gamma(1.0 - s) * zeta(1.0 - s);
    }
    if s == 0.0 {
        return -0.5;
    }
    eta(s) / (1.0 - 2f64.powf(1.0 - s))
}

fn eta(s: f64) -> f64 {
    const N: usize = 40;
    // d_k = n Σ_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!), accumulated by term ratios.
    let n = N as f64;
    let mut d = [0.0f64; N + 1];
    let mut term = 1.0 / n;
    let mut acc = term;
    d[0] = n * acc;
    for i in 1..=N {
        let fi = i as f64;
        term *= (n + fi - 1.0) * (n - fi + 1.0) * 4.0 / ((2.0 * fi - 1.0) * (2.0 * fi));
        acc += term;
        d[i] = n * acc;
    }
    let dn = d[N];
    let mut sum = 0.0;
    for (k, dk) in d.iter().take(N).enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (dk - dn) / ((k + 1) as f64).powf(s);
    }
    -sum / dn
}
