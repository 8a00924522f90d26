//! The limit kernels `G_α` and `h_α`, their Nyström discretization on a
//! uniform grid of `[0, 1)`, operator norms, star products, and closed-form
//! constants.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::GradedIntegrator;
use crate::spectra::{lambda_max_operator, real_matvec, PowerOptions};
use crate::special::{gamma, rgamma, zeta};

const JACOBI_NODES: usize = 24;
const LEGENDRE_NODES: usize = 16;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::Domain(format!("alpha = {alpha} outside (0, 1/2]")));
    }
    Ok(())
}

/// `C_α = Γ(1−2α) / (Γ(1−α) Γ(α))`, the coefficient of the diagonal
/// singularity `G_α(x, y) ≈ C_α |x − y|^{2α−1}`. Infinite at `α = 1/2`.
pub fn singularity_constant(alpha: f64) -> f64 {
    if alpha >= 0.5 {
        return f64::INFINITY;
    }
    gamma(1.0 - 2.0 * alpha) * rgamma(1.0 - alpha) * rgamma(alpha)
}

/// Evaluator for `G_α(x, y) = Γ(α)^{−2} x^α y^α ∫_{max(x,y)}^1 (t−x)^{α−1} (t−y)^{α−1} t^{−2α} dt`.
///
/// With `m = max(x, y)`, `d = |x − y|` and `s = t − m` the integrand is
/// `s^{α−1}` times `(s + d)^{α−1} (s + m)^{−2α}`, which is smooth on the
/// interval but has a singularity at distance `d` to the left.
#[derive(Debug, Clone)]
pub struct GKernel {
    alpha: f64,
    integrator: GradedIntegrator,
    prefactor: f64,
}

impl GKernel {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let r = rgamma(alpha);
        Ok(GKernel {
            alpha,
            integrator: GradedIntegrator::new(alpha - 1.0, JACOBI_NODES, LEGENDRE_NODES),
            prefactor: r * r,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain(format!("({x}, {y}) outside the unit square")));
        }
        if x == y {
            if x == 0.0 {
                return Ok(0.0);
            }
            return Err(Error::Domain("G_alpha is singular on the diagonal".into()));
        }
        Ok(self.eval_off_diagonal(x, y))
    }

    fn eval_off_diagonal(&self, x: f64, y: f64) -> f64 {
        let a = self.alpha;
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        if lo == 0.0 || hi >= 1.0 {
            return 0.0;
        }
        let d = hi - lo;
        let len = 1.0 - hi;
        let integral = self.integrator.integrate(
            |s| (s + d).powf(a - 1.0) * (s + hi).powf(-2.0 * a),
            len,
            d,
            f64::INFINITY,
        );
        self.prefactor * (lo * hi).powf(a) * integral
    }
}

/// `G_α(x, y)` for `(x, y)` in the unit square off the diagonal.
pub fn eval_g_alpha(alpha: f64, x: f64, y: f64) -> Result<f64> {
    GKernel::new(alpha)?.eval(x, y)
}

/// Evaluator for the correction kernel `h_α = h₁ + h₂` with
/// `d = |y − x|`, `m = min(x, y)`:
///
/// * `h₁ = ∫_m^∞ t^{α−1} (d + t)^{α−1} dt = m^{2α−1} ∫_0^1 u^{−2α} (1 + d u/m)^{α−1} du`
/// * `h₂ = ∫_0^m t^{α−1} (d + t)^{α−1} ((1−t)^α − 1) dt
///       + ∫_0^m (1−t)^{α−1} t^α (1 − t − d)^{α−1} (d + t)^α dt`
#[derive(Debug, Clone)]
pub struct HKernel {
    alpha: f64,
    tail: GradedIntegrator,
    near_zero: GradedIntegrator,
    vanishing: GradedIntegrator,
}

impl HKernel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::Domain(format!("alpha = {alpha} outside (0, 1/2)")));
        }
        Ok(HKernel {
            alpha,
            tail: GradedIntegrator::new(-2.0 * alpha, JACOBI_NODES, LEGENDRE_NODES),
            near_zero: GradedIntegrator::new(alpha - 1.0, JACOBI_NODES, LEGENDRE_NODES),
            vanishing: GradedIntegrator::new(alpha, JACOBI_NODES, LEGENDRE_NODES),
        })
    }

    /// `(h₁, h₂)` at `(x, y)`.
    pub fn components(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
            return Err(Error::Domain(format!("({x}, {y}) outside the open unit square")));
        }
        if x == y {
            return Err(Error::Domain("h_alpha is singular on the diagonal".into()));
        }
        let a = self.alpha;
        let m = x.min(y);
        let d = (y - x).abs();
        let h1 = m.powf(2.0 * a - 1.0) * self.tail.integrate(|u| (1.0 + d * u / m).powf(a - 1.0), 1.0, m / d, f64::INFINITY);
        let h2a = self.near_zero.integrate(|t| (d + t).powf(a - 1.0) * ((1.0 - t).powf(a) - 1.0), m, d, 1.0 - m);
        let h2b = self.vanishing.integrate(
            |t| (1.0 - t).powf(a - 1.0) * (1.0 - t - d).powf(a - 1.0) * (d + t).powf(a),
            m,
            d,
            1.0 - d - m,
        );
        Ok((h1, h2a + h2b))
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        self.components(x, y).map(|(a, b)| a + b)
    }
}

/// `h_α(x, y)` for `0 < x, y < 1`, `x ≠ y`.
pub fn eval_h_alpha(alpha: f64, x: f64, y: f64) -> Result<f64> {
    HKernel::new(alpha)?.eval(x, y)
}

/// Treatment of the grid diagonal, where `G_α` is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalRule {
    /// Zero diagonal: plain kernel samples. First-order accurate with an
    /// `O(M^{−2α})` discretization error.
    Zero,
    /// Adds the integral of `C_α |x − y|^{2α−1}` that the off-diagonal
    /// samples miss (a zeta-function correction); the error drops to
    /// `O(1/M)`.
    Corrected,
}

/// Kernel samples `k(i/M, j/M)` on the grid `i = 0..M−1`, with zero
/// diagonal, plus an optional diagonal correction. The discretized operator
/// is `(entries + diag(correction)) / M`.
#[derive(Debug, Clone)]
pub struct NystromKernel {
    size: usize,
    entries: Array2<f64>,
    correction: Vec<f64>,
}

impl NystromKernel {
    /// Samples an arbitrary kernel with zero diagonal.
    pub fn from_fn<F: Fn(f64, f64) -> f64 + Sync>(size: usize, f: F) -> Self {
        let m = size as f64;
        let mut entries = Array2::from_shape_fn((size, size), |(i, j)| if i == j { 0.0 } else { f(i as f64 / m, j as f64 / m) });
        for i in 0..size {
            entries[[i, i]] = 0.0;
        }
        NystromKernel { size, entries, correction: vec![0.0; size] }
    }

    /// From an explicit zero-diagonal sample matrix and diagonal correction.
    pub fn from_parts(entries: Array2<f64>, correction: Vec<f64>) -> Result<Self> {
        let size = entries.nrows();
        if entries.ncols() != size {
            return Err(Error::Dimension { expected: size, got: entries.ncols() });
        }
        if correction.len() != size {
            return Err(Error::Dimension { expected: size, got: correction.len() });
        }
        if (0..size).any(|i| entries[[i, i]] != 0.0) {
            return Err(Error::Domain("kernel samples must have a zero diagonal".into()));
        }
        Ok(NystromKernel { size, entries, correction })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Grid weight `1/M`.
    pub fn scale(&self) -> f64 {
        1.0 / self.size as f64
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn correction(&self) -> &[f64] {
        &self.correction
    }

    /// `entries + diag(correction)`, in kernel units.
    pub fn full_matrix(&self) -> Array2<f64> {
        let mut m = self.entries.clone();
        for (i, c) in self.correction.iter().enumerate() {
            m[[i, i]] += c;
        }
        m
    }

    /// Applies the discretized operator `(entries + diag(correction)) x / M`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let s = self.scale();
        real_matvec(&self.entries, x).into_iter().zip(x.iter().zip(&self.correction)).map(|(v, (xi, c))| (v + c * xi) * s).collect()
    }
}

/// `G_α(i/M, j/M) / c₁(1)` with zero diagonal.
pub fn nystrom_g(alpha: f64, size: usize, c1_at_1: f64) -> Result<NystromKernel> {
    nystrom_g_with(alpha, size, c1_at_1, DiagonalRule::Zero)
}

/// Diagonal correction for the grid point `i/M`, in kernel units.
///
/// Near the diagonal `G_α(x, y) = C_α|x−y|^{2α−1} + O(1)` for `x > 0`, and
/// `Σ_{k=1}^K k^{s} − ∫_0^K t^s dt → ζ(−s)` up to endpoint terms, so the
/// missing mass from both sides is `−2 C_α ζ(1−2α) M^{1−2α}`. At `α = 1/2`
/// the singularity is `−ln|x−y|/π` and the same argument gives
/// `ln(2πM)/π`.
pub fn diagonal_correction(alpha: f64, size: usize) -> f64 {
    let m = size as f64;
    if alpha >= 0.5 {
        (2.0 * std::f64::consts::PI * m).ln() / std::f64::consts::PI
    } else {
        -2.0 * singularity_constant(alpha) * zeta(1.0 - 2.0 * alpha) * m.powf(1.0 - 2.0 * alpha)
    }
}

pub fn nystrom_g_with(alpha: f64, size: usize, c1_at_1: f64, rule: DiagonalRule) -> Result<NystromKernel> {
    if size < 16 {
        return Err(Error::Domain(format!("grid size {size} below 16")));
    }
    if !(c1_at_1 > 0.0) {
        return Err(Error::Domain(format!("c1(1) = {c1_at_1} must be positive")));
    }
    let kernel = GKernel::new(alpha)?;
    let m = size as f64;
    let inv_c = 1.0 / c1_at_1;
    let rows: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|i| ((i + 1)..size).map(|j| kernel.eval_off_diagonal(i as f64 / m, j as f64 / m) * inv_c).collect())
        .collect();
    let mut entries = Array2::zeros((size, size));
    for (i, row) in rows.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            entries[[i, j]] = v;
            entries[[j, i]] = v;
        }
    }
    let correction = match rule {
        DiagonalRule::Zero => vec![0.0; size],
        DiagonalRule::Corrected => {
            let w = diagonal_correction(alpha, size) * inv_c;
            (0..size).map(|i| if i == 0 { 0.0 } else { w }).collect()
        }
    };
    Ok(NystromKernel { size, entries, correction })
}

/// `‖G̃‖ ≈ λ_max(entries + diag(correction)) / M`; for symmetric kernels with
/// nonnegative samples this is the spectral norm of the discretized operator.
pub fn operator_norm_nystrom(kernel: &NystromKernel, opts: &PowerOptions) -> Result<f64> {
    let est = lambda_max_operator(kernel.size, |x: &[f64]| Ok(kernel.apply(x)), opts)?;
    Ok(est.value.abs())
}

/// `t_s = (tr K^s)^{1/s}` for `s = 2..=s_max`, where `K` is the discretized
/// operator. Powers are kept normalized with a separate log-scale so large
/// traces cannot overflow; `tr K^{a+b} = ⟨K^a, K^b⟩_F` halves the number of
/// matrix products.
pub fn iterated_trace_norm(kernel: &NystromKernel, s_max: usize) -> Result<Vec<f64>> {
    if s_max < 2 {
        return Err(Error::Domain("s_max must be at least 2".into()));
    }
    let k = kernel.full_matrix().mapv(|v| v * kernel.scale());
    let half = s_max.div_ceil(2);
    let mut powers: Vec<(Array2<f64>, f64)> = Vec::with_capacity(half);
    let norm0 = k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm0 == 0.0 {
        return Ok(vec![0.0; s_max - 1]);
    }
    powers.push((k.mapv(|v| v / norm0), norm0.ln()));
    for _ in 1..half {
        let (last, log_last) = powers.last().expect("nonempty");
        let p = last.dot(&powers[0].0);
        let scale = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let log = log_last + powers[0].1 + scale.ln();
        powers.push((p.mapv(|v| v / scale), log));
    }
    let mut out = Vec::with_capacity(s_max - 1);
    for s in 2..=s_max {
        let a = s / 2;
        let b = s - a;
        let (pa, la) = &powers[a - 1];
        let (pb, lb) = &powers[b - 1];
        let inner: f64 = pa.iter().zip(pb.iter()).map(|(x, y)| x * y).sum();
        if inner <= 0.0 {
            out.push(0.0);
        } else {
            out.push(((la + lb + inner.ln()) / s as f64).exp());
        }
    }
    Ok(out)
}

/// Samples of the composed kernel `a ⋆ b (x, y) = ∫ a(x, t) b(t, y) dt` on the
/// grid. The diagonal is kept; it is finite when the exponents add up past
/// one half.
#[derive(Debug, Clone)]
pub struct StarKernel {
    size: usize,
    entries: Array2<f64>,
}

impl StarKernel {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let s = 1.0 / self.size as f64;
        real_matvec(&self.entries, x).into_iter().map(|v| v * s).collect()
    }

    fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let s = 1.0 / self.size as f64;
        let mut out = vec![0.0; self.size];
        for (row, xi) in self.entries.rows().into_iter().zip(x) {
            for (o, v) in out.iter_mut().zip(row.iter()) {
                *o += v * xi;
            }
        }
        out.into_iter().map(|v| v * s).collect()
    }

    /// Operator norm of the discretized composition (via `KᵀK`).
    pub fn operator_norm(&self, opts: &PowerOptions) -> Result<f64> {
        let est = lambda_max_operator(self.size, |x: &[f64]| Ok(self.apply_transpose(&self.apply(x))), opts)?;
        Ok(est.value.max(0.0).sqrt())
    }

    /// Dominant eigenvalue of the discretized composition.
    pub fn spectral_radius(&self, opts: &PowerOptions) -> Result<f64> {
        let est = lambda_max_operator(self.size, |x: &[f64]| Ok(self.apply(x)), opts)?;
        Ok(est.value.abs())
    }
}

/// `(A + D_A)(B + D_B) / M` in kernel units.
pub fn star_product(a: &NystromKernel, b: &NystromKernel) -> Result<StarKernel> {
    if a.size != b.size {
        return Err(Error::Dimension { expected: a.size, got: b.size });
    }
    let prod = a.full_matrix().dot(&b.full_matrix()).mapv(|v| v / a.size as f64);
    Ok(StarKernel { size: a.size, entries: prod })
}

/// Closed-form constants for one exponent or an exponent pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBounds {
    pub alphas: (f64, f64),
    /// Lower bound on `‖G̃‖^{−1}` (or on the product constant).
    pub c_lower: f64,
    /// Upper bound as displayed: `Γ²(α)Γ(2α+4)/(6Γ(1+2α))` for one exponent,
    /// the integral form for a pair.
    pub c_upper: f64,
    /// Alternative upper bound: `Γ(2α+4)/(2Γ(2α+1)) = 1/B(2α+1, 3)` for one
    /// exponent, the Gamma form for a pair.
    pub c_upper_alt: f64,
    /// `C_α` (the first exponent's for a pair).
    pub c_singularity: f64,
    /// `H_{α₁,α₂} = 1/α₁ + 1/α₂`.
    pub h_duo: f64,
}

/// `Γ(1+α)Γ(1−α)/Γ(1−2α)`, zero at `α = 1/2`.
fn lower_single(alpha: f64) -> f64 {
    gamma(1.0 + alpha) * gamma(1.0 - alpha) * rgamma(1.0 - 2.0 * alpha)
}

/// `∫_0^1 (1−t)² t^p dt = 2/((p+1)(p+2)(p+3))`.
pub fn beta_moment(p: f64) -> f64 {
    2.0 / ((p + 1.0) * (p + 2.0) * (p + 3.0))
}

pub fn closed_form_bounds(alpha: f64) -> Result<KernelBounds> {
    check_alpha(alpha)?;
    let g = gamma(alpha);
    Ok(KernelBounds {
        alphas: (alpha, alpha),
        c_lower: lower_single(alpha),
        c_upper: g * g * gamma(2.0 * alpha + 4.0) / (6.0 * gamma(1.0 + 2.0 * alpha)),
        c_upper_alt: 1.0 / beta_moment(2.0 * alpha),
        c_singularity: singularity_constant(alpha),
        h_duo: 2.0 / alpha,
    })
}

pub fn product_bounds(alpha1: f64, alpha2: f64) -> Result<KernelBounds> {
    check_alpha(alpha1)?;
    check_alpha(alpha2)?;
    if alpha1 + alpha2 <= 0.5 {
        return Err(Error::Hypothesis(format!("alpha1 + alpha2 = {} must exceed 1/2", alpha1 + alpha2)));
    }
    let p = alpha1 + alpha2;
    let (g1, g2) = (gamma(alpha1), gamma(alpha2));
    let lower = lower_single(alpha1) * lower_single(alpha2) * alpha1.min(alpha2) / p;
    let integral = 1.0 / beta_moment(p) * g1 * g1 / beta_moment(2.0 * alpha1) * g2 * g2 / beta_moment(2.0 * alpha2);
    let gamma_form = gamma(p + 4.0) / (216.0 * gamma(p + 1.0)) * gamma(2.0 * alpha1 + 4.0) * g1 * g1 / gamma(2.0 * alpha1 + 1.0)
        * gamma(2.0 * alpha2 + 4.0)
        * g2
        * g2
        / gamma(2.0 * alpha2 + 1.0);
    Ok(KernelBounds {
        alphas: (alpha1, alpha2),
        c_lower: lower,
        c_upper: integral,
        c_upper_alt: gamma_form,
        c_singularity: singularity_constant(alpha1),
        h_duo: 1.0 / alpha1 + 1.0 / alpha2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Adaptive Simpson with Richardson correction.
    fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                return left + right + delta / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 40)
    }

    /// `G_α` by adaptive quadrature after the substitution `s = w^{1/α}`,
    /// which removes the endpoint singularity.
    fn g_oracle(a: f64, x: f64, y: f64) -> f64 {
        let (lo, hi) = (x.min(y), x.max(y));
        let d = hi - lo;
        let f = |w: f64| {
            let s = w.powf(1.0 / a);
            (s + d).powf(a - 1.0) * (s + hi).powf(-2.0 * a) / a
        };
        let integral = adaptive(&f, 0.0, (1.0 - hi).powf(a), 1e-12);
        (lo * hi).powf(a) * integral / gamma(a).powi(2)
    }

    fn h_oracle(a: f64, x: f64, y: f64) -> f64 {
        let m = x.min(y);
        let d = (y - x).abs();
        // ∫_m^1 directly, ∫_1^∞ with t = 1/v and then v = w^{1/(1−2α)}.
        let near = adaptive(&|t: f64| t.powf(a - 1.0) * (d + t).powf(a - 1.0), m, 1.0, 1e-14);
        let q = 1.0 - 2.0 * a;
        let far = adaptive(&|w: f64| (1.0 + d * w.powf(1.0 / q)).powf(a - 1.0) / q, 0.0, 1.0, 1e-14);
        let h2a = adaptive(
            &|w: f64| {
                let t = w.powf(1.0 / a);
                (d + t).powf(a - 1.0) * ((1.0 - t).powf(a) - 1.0) / a
            },
            0.0,
            m.powf(a),
            1e-14,
        );
        let h2b = adaptive(&|t: f64| (1.0 - t).powf(a - 1.0) * t.powf(a) * (1.0 - t - d).powf(a - 1.0) * (d + t).powf(a), 0.0, m, 1e-14);
        near + far + h2a + h2b
    }

    #[test]
    fn g_examples() {
        assert_eq!(eval_g_alpha(0.25, 0.0, 0.4).unwrap(), 0.0);
        assert_eq!(eval_g_alpha(0.25, 0.3, 1.0).unwrap(), 0.0);
        assert_eq!(eval_g_alpha(0.3, 0.2, 0.7).unwrap(), eval_g_alpha(0.3, 0.7, 0.2).unwrap());
        assert!(eval_g_alpha(0.25, 0.5, 0.5).is_err());
        assert!(eval_g_alpha(0.25, 1.5, 0.5).is_err());
        assert!(eval_g_alpha(0.6, 0.2, 0.5).is_err());
        let v = eval_g_alpha(0.25, 0.3, 0.6).unwrap();
        assert!(v > 0.0 && v <= singularity_constant(0.25) * 0.3f64.powf(-0.5));
        assert_relative_eq!(v, g_oracle(0.25, 0.3, 0.6), max_relative = 1e-10);
    }

    #[test]
    fn g_matches_oracle_across_scales() {
        for &a in &[0.1, 0.25, 0.4, 0.5] {
            for &(x, y) in &[(0.5, 0.5001), (0.01, 0.02), (0.3, 0.999), (0.001, 0.9), (0.7, 0.2)] {
                let v = eval_g_alpha(a, x, y).unwrap();
                assert_relative_eq!(v, g_oracle(a, x, y), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn g_obeys_singularity_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &a in &[0.15, 0.3, 0.45] {
            let k = GKernel::new(a).unwrap();
            let c = singularity_constant(a);
            for _ in 0..200 {
                let (x, y): (f64, f64) = (rng.random(), rng.random());
                if x == y {
                    continue;
                }
                let v = k.eval(x, y).unwrap();
                assert!(v <= c * (x - y).abs().powf(2.0 * a - 1.0) * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn g_near_diagonal_approaches_singular_part() {
        let a = 0.3;
        let c = singularity_constant(a);
        // the next-order term is O(d^{1−2α})
        let d: f64 = 1e-10;
        let v = eval_g_alpha(a, 0.5, 0.5 + d).unwrap();
        assert_relative_eq!(v / (c * d.powf(2.0 * a - 1.0)), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn h_matches_oracle() {
        let v = eval_h_alpha(0.25, 0.2, 0.7).unwrap();
        assert_relative_eq!(v, h_oracle(0.25, 0.2, 0.7), max_relative = 1e-9);
        for &(a, x, y) in &[(0.1, 0.4, 0.45), (0.3, 0.8, 0.1), (0.45, 0.05, 0.95), (0.2, 0.5, 0.501)] {
            assert_relative_eq!(eval_h_alpha(a, x, y).unwrap(), h_oracle(a, x, y), max_relative = 1e-9);
        }
        assert!(eval_h_alpha(0.25, 0.0, 0.5).is_err());
        assert!(eval_h_alpha(0.25, 0.5, 0.5).is_err());
        assert!(eval_h_alpha(0.5, 0.2, 0.5).is_err());
    }

    #[test]
    fn h_first_component_tail_is_finite() {
        // As m → 0 with d fixed, h₂'s first integral vanishes like m^{α+1}.
        let k = HKernel::new(0.25).unwrap();
        let (_, h2_small) = k.components(1e-6, 0.5).unwrap();
        assert!(h2_small.is_finite() && h2_small.abs() < 1e-3);
    }

    #[test]
    fn h_scaled_bound_transfers_to_finer_grid() {
        let a = 0.25;
        let k = HKernel::new(a).unwrap();
        let grid = |n: usize, shift: f64| -> f64 {
            let mut max = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let x = (i as f64 + shift) / n as f64;
                    let y = (j as f64 + 0.5 * shift) / n as f64;
                    if (x - y).abs() < 1e-9 {
                        continue;
                    }
                    let v = k.eval(x, y).unwrap().abs() * (y - x).abs().powf(1.0 - a);
                    max = max.max(v);
                }
            }
            max
        };
        let h = grid(50, 0.5);
        let fine = grid(73, 0.37);
        assert!(fine <= 1.5 * h, "fine {fine} vs coarse {h}");
    }

    #[test]
    fn nystrom_structure_and_singularity_bound() {
        let k = nystrom_g(0.25, 16, 1.0).unwrap();
        let e = k.entries();
        for i in 0..16 {
            assert_eq!(e[[i, i]], 0.0);
            for j in 0..16 {
                assert_eq!(e[[i, j]], e[[j, i]]);
                assert!(e[[i, j]] >= 0.0);
            }
        }
        let m = 64;
        let c1 = 3.0;
        let k = nystrom_g(0.3, m, c1).unwrap();
        let c = singularity_constant(0.3);
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    let bound = c * ((i as f64 - j as f64).abs()).powf(2.0 * 0.3 - 1.0) * (m as f64).powf(1.0 - 0.6) / c1;
                    assert!(k.entries()[[i, j]] <= bound * (1.0 + 1e-9));
                }
            }
        }
        assert!(nystrom_g(0.3, 8, 1.0).is_err());
    }

    #[test]
    fn nystrom_norm_examples() {
        let opts = PowerOptions::default();
        let k = NystromKernel::from_fn(200, |_, _| 1.0);
        let n = operator_norm_nystrom(&k, &opts).unwrap();
        assert!((n - 1.0).abs() <= 2.0 / 200.0);
        let k = NystromKernel::from_fn(200, |x, y| x * y);
        assert!((operator_norm_nystrom(&k, &opts).unwrap() / (1.0 / 3.0) - 1.0).abs() < 0.02);
    }

    #[test]
    fn nystrom_self_convergence() {
        let opts = PowerOptions::default();
        for rule in [DiagonalRule::Zero, DiagonalRule::Corrected] {
            let a = operator_norm_nystrom(&nystrom_g_with(0.3, 500, 1.0, rule).unwrap(), &opts).unwrap();
            let b = operator_norm_nystrom(&nystrom_g_with(0.3, 1000, 1.0, rule).unwrap(), &opts).unwrap();
            assert!(((a - b) / b).abs() < 0.02, "{rule:?}: {a} vs {b}");
        }
    }

    #[test]
    fn corrected_diagonal_converges_at_first_order() {
        let opts = PowerOptions::default();
        let v: Vec<f64> = [200, 400, 800]
            .iter()
            .map(|&m| 1.0 / operator_norm_nystrom(&nystrom_g_with(0.25, m, 1.0, DiagonalRule::Corrected).unwrap(), &opts).unwrap())
            .collect();
        let ratio = (v[1] - v[0]) / (v[2] - v[1]);
        assert!((ratio - 2.0).abs() < 0.3, "successive-difference ratio {ratio}");
    }

    #[test]
    fn iterated_trace_examples() {
        let opts = PowerOptions::default();
        let k = NystromKernel::from_fn(100, |_, _| 1.0);
        let t = iterated_trace_norm(&k, 24).unwrap();
        assert!((t[22] - 0.99).abs() < 1e-3);
        assert!(iterated_trace_norm(&k, 1).is_err());

        let k = nystrom_g(0.3, 400, 1.0).unwrap();
        let norm = operator_norm_nystrom(&k, &opts).unwrap();
        let t = iterated_trace_norm(&k, 24).unwrap();
        assert!(((t[18] - norm) / norm).abs() < 0.02);
        for s in 4..t.len() {
            assert!(t[s] <= t[s - 1] * 1.01);
            assert!(t[s] >= norm * (1.0 - 1e-9));
        }
    }

    #[test]
    fn iterated_trace_survives_large_scale() {
        let k = NystromKernel::from_fn(50, |_, _| 1e200);
        let t = iterated_trace_norm(&k, 6).unwrap();
        assert!((t[4] / 0.98e200 - 1.0).abs() < 0.01);
    }

    #[test]
    fn star_examples() {
        let m = 100;
        let zero = NystromKernel::from_fn(m, |_, _| 0.0);
        let g = nystrom_g(0.3, m, 1.0).unwrap();
        assert!(star_product(&zero, &g).unwrap().entries().iter().all(|v| *v == 0.0));
        assert!(star_product(&zero, &NystromKernel::from_fn(50, |_, _| 0.0)).is_err());

        // u(x)v(y) ⋆ p(x)q(y) = (Σ v p / M) u(x) q(y); diagonals are restored
        // explicitly since the sampled kernels zero them.
        let (u, v, p, q) = (|x: f64| 1.0 + x, |y: f64| y * y, |x: f64| 2.0 - x, |y: f64| (3.0 * y).cos());
        let grid: Vec<f64> = (0..m).map(|i| i as f64 / m as f64).collect();
        let mut a = NystromKernel::from_fn(m, |x, y| u(x) * v(y));
        let mut b = NystromKernel::from_fn(m, |x, y| p(x) * q(y));
        a.correction = grid.iter().map(|&x| u(x) * v(x)).collect();
        b.correction = grid.iter().map(|&x| p(x) * q(x)).collect();
        let s = star_product(&a, &b).unwrap();
        let inner: f64 = grid.iter().map(|&t| v(t) * p(t)).sum::<f64>() / m as f64;
        for (i, &x) in grid.iter().enumerate() {
            for (j, &y) in grid.iter().enumerate() {
                assert!((s.entries()[[i, j]] - inner * u(x) * q(y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn star_of_power_kernels_matches_quadrature() {
        // |x−y|^{2a−1} ⋆ |x−y|^{2b−1} with zeta-corrected diagonals, against
        // 25-digit quadrature of ∫₀¹ |x−t|^{2a−1}|y−t|^{2b−1} dt.
        let (a1, a2) = (0.3, 0.4);
        let m = 1000;
        let corr = |a: f64| -2.0 * zeta(1.0 - 2.0 * a) * (m as f64).powf(1.0 - 2.0 * a);
        let mut k1 = NystromKernel::from_fn(m, |x, y| (x - y).abs().powf(2.0 * a1 - 1.0));
        let mut k2 = NystromKernel::from_fn(m, |x, y| (x - y).abs().powf(2.0 * a2 - 1.0));
        k1.correction = vec![corr(a1); m];
        k2.correction = vec![corr(a2); m];
        let s = star_product(&k1, &k2).unwrap();
        let reference = [
            (100usize, 900usize, 2.4330730664920587),
            (200, 250, 3.2576500462787778),
            (500, 510, 3.597842810399928),
            (0, 999, 1.9582501011612461),
            (300, 700, 2.9011792822784919),
        ];
        let h = product_bounds(a1, a2).unwrap().h_duo;
        for &(i, j, exact) in &reference {
            let d = (i as f64 - j as f64).abs() / m as f64;
            let base = d.powf(2.0 * (a1 + a2) - 1.0);
            let v = s.entries()[[i, j]];
            assert!(((v - exact) / exact).abs() < 0.02, "({i},{j}): {v} vs {exact}");
            assert!(v >= base);
        }
        // Close to the diagonal the integral stays bounded while the power
        // decays, so the constant 1/α₁ + 1/α₂ cannot cap it.
        let base = 0.01f64.powf(2.0 * (a1 + a2) - 1.0);
        assert!(s.entries()[[500, 510]] > h * base);
    }

    #[test]
    fn closed_form_examples() {
        let b = closed_form_bounds(0.25).unwrap();
        let lower = gamma(1.25) * gamma(0.75) / gamma(0.5);
        assert_relative_eq!(b.c_lower, lower, max_relative = 1e-14);
        assert!((b.c_lower - 0.62666).abs() < 1e-5);
        assert_relative_eq!(b.c_singularity, 1.0 / (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-13);
        assert!(b.c_lower <= b.c_upper && b.c_lower <= b.c_upper_alt);
        assert!((closed_form_bounds(1e-9).unwrap().c_lower - 1.0).abs() < 1e-8);
        assert_eq!(closed_form_bounds(0.5).unwrap().c_lower, 0.0);
        assert!(closed_form_bounds(0.0).is_err());
        // 1/B(2α+1, 3) through the Gamma function
        assert_relative_eq!(b.c_upper_alt, gamma(4.5) / (gamma(1.5) * gamma(3.0)), max_relative = 1e-13);
    }

    #[test]
    fn product_bound_examples() {
        let lower_single = |a: f64| gamma(1.0 + a) * gamma(1.0 - a) / gamma(1.0 - 2.0 * a);
        let b = product_bounds(0.3, 0.3).unwrap();
        assert_relative_eq!(b.c_lower, lower_single(0.3).powi(2) * 0.5, max_relative = 1e-13);
        let b = product_bounds(0.3, 0.4).unwrap();
        assert!(b.c_lower > 0.0 && b.c_lower < b.c_upper && b.c_lower < b.c_upper_alt);
        for p in [0.7, 0.6, 0.8] {
            assert_relative_eq!(beta_moment(p), gamma(p + 1.0) * 2.0 / gamma(p + 4.0), max_relative = 1e-13);
        }
        // The two displayed upper bounds differ by exactly (6/2)^3.
        assert_relative_eq!(b.c_upper / b.c_upper_alt, 27.0, max_relative = 1e-12);
        assert!(matches!(product_bounds(0.2, 0.25), Err(Error::Hypothesis(_))));
    }
}
