//! Extreme eigenvalues of Hermitian positive-definite operators: inverse and
//! direct power iteration, a Jacobi reference eigensolver, and spectral norms.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::toeplitz_core::ToeplitzSystem;

pub const DEFAULT_SEED: u64 = 0x5EED;
pub const DENSE_LIMIT: usize = 512;

/// Converged eigenvalue with the iteration count and the residual
/// `‖Av − λv‖/‖v‖` of the returned pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions { tol: 1e-10, max_iters: 10_000, seed: DEFAULT_SEED, restarts: 3 }
    }
}

impl PowerOptions {
    pub fn with_tol(tol: f64) -> Self {
        PowerOptions { tol, ..Default::default() }
    }
}

/// Field operations needed by the power iteration.
pub trait Scalar: Copy + Send + Sync + std::fmt::Debug + 'static {
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn from_re(v: f64) -> Self;
    fn scale(self, s: f64) -> Self;
    fn mul(self, o: Self) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn norm_sqr(self) -> f64;
    fn random<R: Rng>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn from_re(v: f64) -> Self {
        v
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn random<R: Rng>(rng: &mut R) -> Self {
        rng.random_range(-1.0..1.0)
    }
}

impl Scalar for Complex64 {
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn from_re(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn random<R: Rng>(rng: &mut R) -> Self {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }
}

fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::from_re(0.0), |acc, (a, b)| acc.add(a.conj().mul(*b)))
}

fn norm<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize<T: Scalar>(x: &mut [T]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        for v in x.iter_mut() {
            *v = v.scale(1.0 / n);
        }
    }
    n
}

/// Dominant (largest-magnitude) eigenpair of a Hermitian operator from a
/// given start vector.
///
/// Stops when the relative residual falls below `tol`, or when the
/// Rayleigh quotient has settled to `tol` and the relative residual is below
/// `sqrt(tol)`; the eigenvalue error is quadratic in the residual, so the
/// second rule already pins the value to about `tol`.
pub fn power_iteration<T: Scalar, F>(mut apply: F, start: Vec<T>, tol: f64, max_iters: usize) -> Result<(EigenEstimate, Vec<T>)>
where
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    let mut v = start;
    if normalize(&mut v) == 0.0 {
        return Err(Error::Domain("zero start vector".into()));
    }
    let mut prev = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        let w = apply(&v)?;
        let lambda = dot(&v, &w).re();
        residual = w.iter().zip(&v).map(|(a, b)| a.sub(b.scale(lambda)).norm_sqr()).sum::<f64>().sqrt();
        let scale = lambda.abs();
        if scale == 0.0 && norm(&w) == 0.0 {
            return Ok((EigenEstimate { value: 0.0, iterations: it, residual: 0.0 }, v));
        }
        let settled = (lambda - prev).abs() <= tol * scale;
        if residual <= tol * scale || (settled && residual <= tol.sqrt() * scale) {
            return Ok((EigenEstimate { value: lambda, iterations: it, residual }, v));
        }
        prev = lambda;
        v = w;
        if normalize(&mut v) == 0.0 {
            return Ok((EigenEstimate { value: 0.0, iterations: it, residual: 0.0 }, v));
        }
    }
    Err(Error::NoConvergence { iterations: max_iters, residual })
}

fn random_vector<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    (0..n).map(|_| T::random(rng)).collect()
}

/// Largest eigenvalue of a Hermitian operator given as a closure, taking
/// the best of `opts.restarts` seeded random starts.
pub fn lambda_max_operator<T: Scalar, F>(dim: usize, mut apply: F, opts: &PowerOptions) -> Result<EigenEstimate>
where
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<EigenEstimate> = None;
    for _ in 0..opts.restarts.max(1) {
        let start = random_vector::<T>(&mut rng, dim);
        let (est, _) = power_iteration(&mut apply, start, opts.tol, opts.max_iters)?;
        if best.is_none_or(|b| est.value > b.value) {
            best = Some(est);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Largest-magnitude eigenvalue of a dense Hermitian matrix.
pub fn lambda_max_matrix(matrix: &Array2<Complex64>, opts: &PowerOptions) -> Result<EigenEstimate> {
    check_square(matrix)?;
    lambda_max_operator(matrix.nrows(), |x: &[Complex64]| Ok(crate::dense::matvec(matrix, x)), opts)
}

/// Largest-magnitude eigenvalue of a dense real symmetric matrix.
pub fn lambda_max_real(matrix: &Array2<f64>, opts: &PowerOptions) -> Result<EigenEstimate> {
    check_square(matrix)?;
    lambda_max_operator(matrix.nrows(), |x: &[f64]| Ok(real_matvec(matrix, x)), opts)
}

pub(crate) fn real_matvec(a: &Array2<f64>, x: &[f64]) -> Vec<f64> {
    use rayon::prelude::*;
    let n = a.ncols();
    let slice = a.as_slice();
    match slice {
        Some(s) if a.nrows() >= 256 => s.par_chunks(n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect(),
        _ => a.rows().into_iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect(),
    }
}

fn check_square<T>(m: &Array2<T>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension { expected: m.nrows(), got: m.ncols() });
    }
    Ok(())
}

/// Iterations of unshifted inverse iteration before switching to a shift.
const UNSHIFTED_BUDGET: usize = 400;

/// Smallest eigenvalue of a positive-definite Toeplitz system by inverse
/// iteration, one Gohberg–Semencul solve per step. The reported value is the
/// Rayleigh quotient of `T` at the converged vector.
///
/// For symbols without a zero the bottom eigenvalues are only `O(N⁻²)` apart
/// and unshifted iteration stalls. After a fixed budget the shift is instead
/// bracketed by bisection on the positive-definiteness of `T − σI` (a
/// Levinson pass without breakdown) and the iteration restarts on the
/// shifted system.
pub fn lambda_min_toeplitz(system: &ToeplitzSystem, opts: &PowerOptions) -> Result<EigenEstimate> {
    if !(opts.tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    system.predictor()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start = random_vector::<Complex64>(&mut rng, system.dim());
    let budget = UNSHIFTED_BUDGET.min(opts.max_iters);
    let (iterations, v) = match power_iteration(|x: &[Complex64]| system.solve(x), start.clone(), opts.tol, budget) {
        Ok((est, v)) => (est.iterations, v),
        Err(Error::NoConvergence { .. }) if opts.max_iters > budget => {
            let shift = bracket_bottom(system, opts.tol)?;
            let mut coeffs: Vec<Complex64> = (0..=system.order() as i64).map(|j| system.lag(j)).collect();
            coeffs[0] -= shift;
            let shifted = ToeplitzSystem::from_coeffs(coeffs);
            let (est, v) =
                power_iteration(|x: &[Complex64]| shifted.solve(x), start, opts.tol, opts.max_iters - budget)?;
            (budget + est.iterations, v)
        }
        Err(e) => return Err(e),
    };
    let tv = system.matvec(&v)?;
    let lambda = dot(&v, &tv).re / dot(&v, &v).re;
    let residual = tv.iter().zip(&v).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt() / norm(&v);
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("non-positive smallest eigenvalue {lambda:e}")));
    }
    Ok(EigenEstimate { value: lambda, iterations, residual })
}

/// Largest `σ ∈ [lo, hi]`, to within `tol`, with `T − σI` positive
/// definite, where `coeffs` are `t(0..=N)`. `T − lo·I` must be definite.
fn definite_edge(coeffs: &[Complex64], mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut shifted = coeffs.to_vec();
    let t0 = coeffs[0];
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        shifted[0] = t0 - mid;
        match crate::toeplitz_core::levinson(&shifted) {
            Ok(_) => lo = mid,
            Err(Error::Breakdown { .. }) => hi = mid,
            Err(e) => return Err(e),
        }
    }
    Ok(lo)
}

fn bracket_bottom(system: &ToeplitzSystem, tol: f64) -> Result<f64> {
    let coeffs: Vec<Complex64> = (0..=system.order() as i64).map(|j| system.lag(j)).collect();
    let top = coeffs[0].re;
    definite_edge(&coeffs, 0.0, top, tol * top)
}

/// `(λ_min, λ_max)` of a Hermitian Toeplitz matrix, definite or not, to
/// absolute accuracy `tol · Σ|t(j)|`.
///
/// Bisects on the definiteness of `T − σI` (and of `σI − T`), each test a
/// Levinson pass, so the cost is `O(N²)` per step but the result does not
/// depend on eigenvalue gaps.
pub fn toeplitz_spectral_bounds(system: &ToeplitzSystem, tol: f64) -> Result<(f64, f64)> {
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let coeffs: Vec<Complex64> = (0..=system.order() as i64).map(|j| system.lag(j)).collect();
    // every eigenvalue lies within the largest absolute row sum
    let bound = coeffs[0].norm() + 2.0 * coeffs[1..].iter().map(|c| c.norm()).sum::<f64>();
    if bound == 0.0 {
        return Ok((0.0, 0.0));
    }
    let outside = -1.5 * bound;
    let abs_tol = tol * bound;
    let low = definite_edge(&coeffs, outside, coeffs[0].re, abs_tol)?;
    let negated: Vec<Complex64> = coeffs.iter().map(|c| -c).collect();
    let high = -definite_edge(&negated, outside, -coeffs[0].re, abs_tol)?;
    Ok((low, high))
}

/// Spectral norm of a Hermitian Toeplitz matrix from
/// [`toeplitz_spectral_bounds`].
pub fn toeplitz_norm(system: &ToeplitzSystem, tol: f64) -> Result<f64> {
    let (low, high) = toeplitz_spectral_bounds(system, tol)?;
    Ok(low.abs().max(high.abs()))
}

/// Smallest eigenvalue of the product `A B` of two positive-definite
/// Toeplitz matrices.
///
/// `S = B⁻¹A⁻¹` is self-adjoint in the inner product `⟨x, y⟩ = x^H A⁻¹ y`,
/// so power iteration on `S` in that geometry converges to its spectral
/// radius `1/λ_min(AB)`. Each step costs two solves.
pub fn lambda_min_product(a: &ToeplitzSystem, b: &ToeplitzSystem, opts: &PowerOptions) -> Result<EigenEstimate> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension { expected: a.dim(), got: b.dim() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<Complex64> = random_vector(&mut rng, a.dim());
    let mut wv = a.solve(&v)?;
    let mut prev = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iters {
        let sv = b.solve(&wv)?;
        let wsv = a.solve(&sv)?;
        let vv = dot(&v, &wv).re;
        let mu = dot(&v, &wsv).re / vv;
        // ‖Sv − μv‖²_W = (Sv − μv)^H (W S v − μ W v)
        let r2: f64 = sv
            .iter()
            .zip(&v)
            .zip(wsv.iter().zip(&wv))
            .map(|((s, x), (ws, wx))| ((s - x * mu).conj() * (ws - wx * mu)).re)
            .sum();
        residual = r2.max(0.0).sqrt() / vv.sqrt();
        let settled = (mu - prev).abs() <= opts.tol * mu.abs();
        if residual <= opts.tol * mu || (settled && residual <= opts.tol.sqrt() * mu) {
            return Ok(EigenEstimate { value: 1.0 / mu, iterations: it, residual: residual / mu });
        }
        prev = mu;
        let s = 1.0 / dot(&sv, &wsv).re.sqrt();
        v = sv.into_iter().map(|z| z * s).collect();
        wv = wsv.into_iter().map(|z| z * s).collect();
    }
    Err(Error::NoConvergence { iterations: opts.max_iters, residual })
}

/// Full spectrum of a Hermitian matrix by cyclic complex Jacobi rotations,
/// in ascending order.
pub fn dense_eig_oracle(matrix: &Array2<Complex64>) -> Result<Vec<f64>> {
    check_square(matrix)?;
    let n = matrix.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::OrderGuard { order: n, limit: DENSE_LIMIT });
    }
    let mut a = matrix.clone();
    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = 1e-12 * total;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[[p, q]].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= target {
            let mut ev: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
            ev.sort_by(f64::total_cmp);
            return Ok(ev);
        }
        for p in 0..n {
            for q in p + 1..n {
                jacobi_rotate(&mut a, p, q);
            }
        }
    }
    Err(Error::NoConvergence { iterations: 100, residual: f64::NAN })
}

fn jacobi_rotate(a: &mut Array2<Complex64>, p: usize, q: usize) {
    let n = a.nrows();
    let apq = a[[p, q]];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    // Phase D = diag(.., e^{-iφ} at q, ..) makes the (p, q) entry real.
    let phase = apq / mag;
    for r in 0..n {
        a[[r, q]] *= phase.conj();
        a[[q, r]] *= phase;
    }
    let app = a[[p, p]].re;
    let aqq = a[[q, q]].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
    let t = if tau == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[[r, p]];
        let arq = a[[r, q]];
        let nrp = arp * c - arq * s;
        let nrq = arp * s + arq * c;
        a[[r, p]] = nrp;
        a[[r, q]] = nrq;
        a[[p, r]] = nrp.conj();
        a[[q, r]] = nrq.conj();
    }
    a[[p, p]] = Complex64::new(app - t * mag, 0.0);
    a[[q, q]] = Complex64::new(aqq + t * mag, 0.0);
    a[[p, q]] = Complex64::new(0.0, 0.0);
    a[[q, p]] = Complex64::new(0.0, 0.0);
}

/// Spectral norm of an arbitrary matrix: square root of the dominant
/// eigenvalue of `A^H A`, found by power iteration.
pub fn operator_norm_matrix(matrix: &Array2<Complex64>, opts: &PowerOptions) -> Result<f64> {
    let at = crate::dense::adjoint(matrix);
    let est = lambda_max_operator(
        matrix.ncols(),
        |x: &[Complex64]| Ok(crate::dense::matvec(&at, &crate::dense::matvec(matrix, x))),
        opts,
    )?;
    Ok(est.value.max(0.0).sqrt())
}
