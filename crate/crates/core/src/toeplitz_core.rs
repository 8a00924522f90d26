//! Hermitian Toeplitz matrices `T_{k,l} = ĥ(l − k)`: Levinson predictor
//! polynomials, Gohberg–Semencul inversion, and FFT-based products and solves.

use std::sync::OnceLock;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{CirculantEmbedding, LowerToeplitz};
use crate::fh_symbols::FourierTable;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Normalized first column `γ_u = (T⁻¹)_{u,0} / sqrt((T⁻¹)_{0,0})` of the
/// inverse, i.e. the coefficients of the predictor polynomial
/// `P_N(z) = Σ γ_u z^u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorPoly {
    gamma: Vec<Complex64>,
    reflection: Vec<Complex64>,
    variance: f64,
}

impl PredictorPoly {
    /// A predictor from raw coefficients; `γ₀` must be real and positive.
    pub fn new(gamma: Vec<Complex64>) -> Result<Self> {
        match gamma.first() {
            Some(g0) if g0.im == 0.0 && g0.re > 0.0 => {
                let variance = 1.0 / (g0.re * g0.re);
                Ok(PredictorPoly { gamma, reflection: Vec::new(), variance })
            }
            _ => Err(Error::Domain("gamma_0 must be real and positive".into())),
        }
    }

    pub fn degree(&self) -> usize {
        self.gamma.len() - 1
    }

    pub fn gamma(&self) -> &[Complex64] {
        &self.gamma
    }

    /// Reflection (Verblunsky) coefficients produced by the recursion.
    pub fn reflection(&self) -> &[Complex64] {
        &self.reflection
    }

    /// Final prediction-error variance `1/(T⁻¹)_{0,0}`.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.gamma.iter().rev().fold(ZERO, |acc, g| acc * z + g)
    }

    /// `min |P_N(e^{iθ})|` over `samples` equispaced points.
    pub fn min_modulus_on_circle(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|k| self.eval(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / samples as f64)).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// `ω̃_j`: zero at `j = 0`, `conj(γ_{N+1−j})` otherwise.
    fn tilde(&self, j: usize) -> Complex64 {
        if j == 0 {
            ZERO
        } else {
            self.gamma[self.degree() + 1 - j].conj()
        }
    }

    fn tilde_vec(&self) -> Vec<Complex64> {
        (0..=self.degree()).map(|j| self.tilde(j)).collect()
    }

    /// Calls `f(k, l, (T⁻¹)_{k,l})` for every `k ≤ l`, walking each diagonal
    /// with the Gohberg–Semencul update
    /// `E(k, l) = E(k−1, l−1) + ω_k conj(ω_l) − ω̃_k conj(ω̃_l)`.
    pub fn for_each_inverse_entry<F: FnMut(usize, usize, Complex64)>(&self, mut f: F) {
        let n = self.degree();
        let g = &self.gamma;
        let t = self.tilde_vec();
        for d in 0..=n {
            let mut acc = ZERO;
            for k in 0..=n - d {
                let l = k + d;
                acc += g[k] * g[l].conj() - t[k] * t[l].conj();
                f(k, l, acc);
            }
        }
    }

    /// Dense `T⁻¹` assembled from the predictor.
    pub fn full_inverse(&self) -> Array2<Complex64> {
        let n = self.degree() + 1;
        let mut out = Array2::zeros((n, n));
        self.for_each_inverse_entry(|k, l, v| {
            out[[k, l]] = v;
            out[[l, k]] = v.conj();
        });
        out
    }
}

/// Levinson–Durbin recursion for `T a = P e₀` with `a₀ = 1`.
pub fn levinson(t: &[Complex64]) -> Result<PredictorPoly> {
    let n = t.len() - 1;
    let t0 = t[0];
    if !(t0.re > 0.0) || t0.im.abs() > 1e-12 * t0.re.abs() {
        return Err(Error::Breakdown { step: 0, variance: t0.re });
    }
    let mut a = Vec::with_capacity(n + 1);
    a.push(Complex64::new(1.0, 0.0));
    let mut p = t0.re;
    let mut reflection = Vec::with_capacity(n);
    let mut next = Vec::with_capacity(n + 1);
    for m in 0..n {
        // a has length m+1; extend to m+2.
        let mut err = ZERO;
        for (j, aj) in a.iter().enumerate() {
            err += t[m + 1 - j].conj() * aj;
        }
        let kappa = -err / p;
        next.clear();
        next.push(a[0]);
        for j in 1..=m {
            next.push(a[j] + kappa * a[m + 1 - j].conj());
        }
        next.push(kappa * a[0].conj());
        std::mem::swap(&mut a, &mut next);
        let p_new = p * (1.0 - kappa.norm_sqr());
        if !(p_new > 0.0) || !p_new.is_finite() {
            return Err(Error::Breakdown { step: m + 1, variance: p_new });
        }
        p = p_new;
        reflection.push(kappa);
    }
    let s = 1.0 / p.sqrt();
    let gamma = a.into_iter().map(|v| v * s).collect();
    Ok(PredictorPoly { gamma, reflection, variance: p })
}

/// Coefficients `q_u = conj(γ_{N−u})` of `Q_N(z) = z^N conj(P_N(1/conj z))`.
pub fn orthogonal_poly(pred: &PredictorPoly) -> Vec<Complex64> {
    pred.gamma.iter().rev().map(|g| g.conj()).collect()
}

/// `(T_N⁻¹)_{k,l}` from the predictor coefficients alone.
pub fn gs_inverse_entry(pred: &PredictorPoly, k: usize, l: usize) -> Result<Complex64> {
    let n = pred.degree();
    if k > n || l > n {
        return Err(Error::Index { k, l, order: n });
    }
    if k > l {
        return gs_inverse_entry(pred, l, k).map(|v| v.conj());
    }
    let g = &pred.gamma;
    let d = l - k;
    let mut acc = ZERO;
    for j in 0..=k {
        acc += g[j] * g[j + d].conj();
        acc -= pred.tilde(j) * pred.tilde(j + d).conj();
    }
    Ok(acc)
}

struct Solver {
    a: LowerToeplitz,
    b: LowerToeplitz,
}

/// Order-`N` Hermitian Toeplitz matrix (size `N+1`) backed by a Fourier table.
pub struct ToeplitzSystem {
    order: usize,
    coeffs: Vec<Complex64>,
    predictor: OnceLock<Result<PredictorPoly>>,
    solver: OnceLock<Solver>,
    product: OnceLock<CirculantEmbedding>,
}

impl std::fmt::Debug for ToeplitzSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToeplitzSystem")
            .field("order", &self.order)
            .field("predictor_ready", &self.predictor.get().is_some())
            .finish()
    }
}

impl Clone for ToeplitzSystem {
    fn clone(&self) -> Self {
        ToeplitzSystem {
            order: self.order,
            coeffs: self.coeffs.clone(),
            predictor: self.predictor.clone(),
            solver: OnceLock::new(),
            product: OnceLock::new(),
        }
    }
}

/// `T_N` with `T_{k,l} = ĥ(l − k)`, `0 ≤ k, l ≤ N`.
pub fn build_toeplitz(table: &FourierTable, order: usize) -> Result<ToeplitzSystem> {
    if table.half_width() < order {
        return Err(Error::Domain(format!(
            "Fourier table half-width {} is below the order {order}",
            table.half_width()
        )));
    }
    let scale = table.get(0).norm().max(f64::MIN_POSITIVE);
    let order_i = order as i64;
    let defect = (0..=order_i).map(|n| (table.get(-n) - table.get(n).conj()).norm()).fold(0.0, f64::max);
    if defect > 1e-12 * scale {
        return Err(Error::InvalidSymbol(format!("table is not Hermitian (defect {defect:e})")));
    }
    let coeffs = (0..=order_i).map(|n| table.get(n)).collect();
    Ok(ToeplitzSystem::from_coeffs(coeffs))
}

impl ToeplitzSystem {
    /// System from `t(0..=N)`; negative lags follow by Hermitian symmetry.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        ToeplitzSystem {
            order: coeffs.len() - 1,
            coeffs,
            predictor: OnceLock::new(),
            solver: OnceLock::new(),
            product: OnceLock::new(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.order + 1
    }

    /// `ĥ(j)` for `|j| ≤ N`.
    pub fn lag(&self, j: i64) -> Complex64 {
        if j >= 0 {
            self.coeffs[j as usize]
        } else {
            self.coeffs[(-j) as usize].conj()
        }
    }

    pub fn entry(&self, k: usize, l: usize) -> Complex64 {
        self.lag(l as i64 - k as i64)
    }

    pub fn dense(&self) -> Array2<Complex64> {
        let n = self.dim();
        Array2::from_shape_fn((n, n), |(k, l)| self.entry(k, l))
    }

    /// The leading `(m+1) × (m+1)` section.
    pub fn truncate(&self, m: usize) -> ToeplitzSystem {
        ToeplitzSystem::from_coeffs(self.coeffs[..=m.min(self.order)].to_vec())
    }

    /// Predictor polynomial, computed on first use and cached.
    pub fn predictor(&self) -> Result<&PredictorPoly> {
        self.predictor.get_or_init(|| levinson(&self.coeffs)).as_ref().map_err(Clone::clone)
    }

    /// `T x` by circulant embedding.
    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.len() });
        }
        let op = self.product.get_or_init(|| CirculantEmbedding::new(self.dim(), |j| self.lag(j)));
        Ok(op.apply(x))
    }

    /// `T⁻¹ b` as `A(A^H b) − B(B^H b)` with `A`, `B` the lower-triangular
    /// Toeplitz factors of the Gohberg–Semencul formula.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        if rhs.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: rhs.len() });
        }
        let pred = self.predictor()?;
        let s = self.solver.get_or_init(|| Solver {
            a: LowerToeplitz::new(&pred.gamma),
            b: LowerToeplitz::new(&pred.tilde_vec()),
        });
        let conj_rhs: Vec<Complex64> = rhs.iter().map(|z| z.conj()).collect();
        let ya: Vec<Complex64> = s.a.apply_transpose(&conj_rhs).into_iter().map(|z| z.conj()).collect();
        let yb: Vec<Complex64> = s.b.apply_transpose(&conj_rhs).into_iter().map(|z| z.conj()).collect();
        let xa = s.a.apply(&ya);
        let xb = s.b.apply(&yb);
        Ok(xa.into_iter().zip(xb).map(|(p, q)| p - q).collect())
    }
}

/// Free-function form of [`ToeplitzSystem::predictor`].
pub fn levinson_predictor(system: &ToeplitzSystem) -> Result<PredictorPoly> {
    system.predictor().cloned()
}

pub fn toeplitz_solve(system: &ToeplitzSystem, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    system.solve(rhs)
}

pub fn matvec(system: &ToeplitzSystem, x: &[Complex64]) -> Result<Vec<Complex64>> {
    system.matvec(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense;
    use crate::fh_symbols::{fourier_of_symbol, random_regular_factor, wiener_hopf_beta, SymbolSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn system(spec: &SymbolSpec, n: usize) -> ToeplitzSystem {
        build_toeplitz(&fourier_of_symbol(spec, n).unwrap(), n).unwrap()
    }

    fn random_spec(rng: &mut ChaCha8Rng, alpha: f64) -> SymbolSpec {
        let d = rand::Rng::random_range(rng, 1..=4);
        SymbolSpec::new(alpha, random_regular_factor(rng, d, 0.1)).unwrap()
    }

    #[test]
    fn build_examples() {
        let s = build_toeplitz(&FourierTable::delta(3), 3).unwrap();
        assert_eq!(s.dense(), Array2::<Complex64>::eye(4));
        let t = fourier_of_symbol(&SymbolSpec::one(0.25).unwrap(), 1).unwrap();
        let s = build_toeplitz(&t, 1).unwrap();
        let d = s.dense();
        assert_eq!(d[[0, 0]], t.get(0));
        assert_eq!(d[[0, 1]], t.get(1));
        assert_eq!(d[[1, 0]], t.get(1).conj());
        assert!(build_toeplitz(&t, 2).is_err());

        let s = system(&SymbolSpec::one(0.3).unwrap(), 16);
        let n = 16;
        for k in 0..=n {
            for l in 0..=n {
                assert_eq!(s.entry(k, l), s.entry(n - l, n - k).conj());
                assert_eq!(s.entry(k, l).im, 0.0);
            }
        }
    }

    #[test]
    fn levinson_identity_and_dense_oracle() {
        let s = build_toeplitz(&FourierTable::delta(5), 5).unwrap();
        let p = s.predictor().unwrap();
        assert_eq!(p.gamma()[0], c(1.0));
        assert!(p.gamma()[1..].iter().all(|z| z.norm() == 0.0));

        let s = system(&SymbolSpec::one(0.25).unwrap(), 32);
        let inv = dense::inverse(&s.dense()).unwrap();
        let scale = inv[[0, 0]].re.sqrt();
        let p = s.predictor().unwrap();
        for u in 0..=32 {
            let oracle = inv[[u, 0]] / scale;
            assert!((p.gamma()[u] - oracle).norm() <= 1e-10 * oracle.norm().max(1e-3), "u={u}");
        }
        assert!(p.min_modulus_on_circle(8 * 33) > 0.0);
    }

    #[test]
    fn levinson_reports_breakdown() {
        // [[1, 2], [2, 1]] is indefinite.
        let s = ToeplitzSystem::from_coeffs(vec![c(1.0), c(2.0)]);
        assert_eq!(s.predictor().unwrap_err(), Error::Breakdown { step: 1, variance: -3.0 });
        assert!(s.solve(&[c(1.0), c(0.0)]).is_err());
    }

    #[test]
    fn predictor_against_beta_asymptotics() {
        let spec = SymbolSpec::one(0.25).unwrap();
        let s = system(&spec, 1024);
        let beta = wiener_hopf_beta(&spec, 1024).unwrap();
        let k = 100;
        let predicted = beta.values[k].re * (1.0 - k as f64 / 1024.0).powf(0.25);
        let ratio = s.predictor().unwrap().gamma()[k].re / predicted;
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn orthogonal_poly_examples() {
        let p = PredictorPoly::new(vec![c(1.0), c(0.0), c(0.0)]).unwrap();
        assert_eq!(orthogonal_poly(&p), vec![c(0.0), c(0.0), c(1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = random_spec(&mut rng, 0.25);
        let s = system(&spec, 64);
        let p = s.predictor().unwrap();
        let q = orthogonal_poly(p);
        let back: Vec<Complex64> = q.iter().rev().map(|z| z.conj()).collect();
        assert_eq!(back, p.gamma());
        for k in 0..512 {
            let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 512.0);
            let qz = q.iter().rev().fold(ZERO, |acc, g| acc * z + g);
            assert!((qz.norm() - p.eval(z).norm()).abs() < 1e-12 * p.eval(z).norm().max(1.0));
        }
    }

    #[test]
    fn gohberg_semencul_matches_dense_inverse() {
        let s = build_toeplitz(&FourierTable::delta(4), 4).unwrap();
        let p = s.predictor().unwrap();
        for k in 0..=4 {
            for l in 0..=4 {
                let v = gs_inverse_entry(p, k, l).unwrap();
                assert_eq!(v, if k == l { c(1.0) } else { ZERO });
            }
        }
        assert!(gs_inverse_entry(p, 5, 0).is_err());

        let s = system(&SymbolSpec::one(0.25).unwrap(), 48);
        let inv = dense::inverse(&s.dense()).unwrap();
        let p = s.predictor().unwrap();
        let mut max = 0.0f64;
        for k in 0..=48 {
            for l in 0..=48 {
                max = max.max((gs_inverse_entry(p, k, l).unwrap() - inv[[k, l]]).norm());
            }
        }
        assert!(max < 1e-9, "max error {max:e}");

        // Complex, non-even symbols exercise the conjugation orientation.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let spec = random_spec(&mut rng, 0.3);
            let s = system(&spec, 24);
            let inv = dense::inverse(&s.dense()).unwrap();
            let full = s.predictor().unwrap().full_inverse();
            let err = dense::frobenius(&(full - &inv)) / dense::frobenius(&inv);
            assert!(err < 1e-11, "relative error {err:e}");
            let p = s.predictor().unwrap();
            assert!((gs_inverse_entry(p, 3, 17).unwrap() - inv[[3, 17]]).norm() < 1e-10);
            assert!((gs_inverse_entry(p, 20, 2).unwrap() - inv[[20, 2]]).norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_diagonal_is_positive() {
        let s = system(&SymbolSpec::one(0.25).unwrap(), 512);
        let v = gs_inverse_entry(s.predictor().unwrap(), 256, 256).unwrap();
        assert!(v.re > 0.0 && v.im == 0.0);
    }

    #[test]
    fn solve_examples() {
        let s = build_toeplitz(&FourierTable::delta(6), 6).unwrap();
        let mut e = vec![ZERO; 7];
        e[0] = c(1.0);
        let x = s.solve(&e).unwrap();
        for (a, b) in x.iter().zip(&e) {
            assert!((a - b).norm() < 1e-15);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = random_spec(&mut rng, 0.0);
        let s = system(&spec, 64);
        let rhs: Vec<Complex64> = (0..65)
            .map(|_| Complex64::new(rand::Rng::random_range(&mut rng, -1.0..1.0), rand::Rng::random_range(&mut rng, -1.0..1.0)))
            .collect();
        let x = s.solve(&rhs).unwrap();
        let b = Array2::from_shape_vec((65, 1), rhs.clone()).unwrap();
        let oracle = dense::lu_solve(&s.dense(), &b).unwrap();
        let norm: f64 = oracle.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let err: f64 = x.iter().zip(oracle.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-8 * norm);

        let s = system(&SymbolSpec::one(0.25).unwrap(), 1024);
        let ones = vec![c(1.0); 1025];
        let rhs = s.matvec(&ones).unwrap();
        let x = s.solve(&rhs).unwrap();
        let max = x.iter().map(|z| (z - c(1.0)).norm()).fold(0.0, f64::max);
        assert!(max < 1e-6, "max error {max:e}");
        assert!(s.solve(&ones[..10]).is_err());
    }

    #[test]
    fn matvec_examples() {
        let s = build_toeplitz(&FourierTable::delta(4), 4).unwrap();
        let x = vec![c(1.0), c(-2.0), c(3.0), c(0.5), c(0.0)];
        let y = s.matvec(&x).unwrap();
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!(s.matvec(&[ZERO; 5]).unwrap().iter().all(|z| z.norm() == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = random_spec(&mut rng, 0.2);
        let s = system(&spec, 32);
        let x: Vec<Complex64> = (0..33).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let y = s.matvec(&x).unwrap();
        let oracle = dense::matvec(&s.dense(), &x);
        let norm: f64 = oracle.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let err: f64 = y.iter().zip(&oracle).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-10 * norm);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rustfft::FftPlanner;

        /// Fourier coefficients `ĥ(−n..=n)` of `1/|P(e^{−iθ})|²` by the
        /// trapezoid rule on `len` points. With `T_{k,l} = ĥ(l − k)` the
        /// first column of `T⁻¹` is orthogonal for the reflected variable;
        /// for real even symbols the two orientations coincide.
        fn inverse_modulus_coeffs(gamma: &[Complex64], n: usize, len: usize) -> Vec<Complex64> {
            let mut planner = FftPlanner::new();
            let mut buf = vec![ZERO; len];
            buf[..gamma.len()].copy_from_slice(gamma);
            // P(e^{−iθ_j}) = Σ γ_k e^{−ikθ_j}
            planner.plan_fft_forward(len).process(&mut buf);
            let mut h: Vec<Complex64> = buf.iter().map(|p| c(1.0 / p.norm_sqr())).collect();
            planner.plan_fft_forward(len).process(&mut h);
            (-(n as i64)..=n as i64).map(|s| h[s.rem_euclid(len as i64) as usize] / len as f64).collect()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn gohberg_semencul_equals_dense_inverse(seed in any::<u64>(), alpha in 0.0..=0.5f64, n in 4usize..=64) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = system(&random_spec(&mut rng, alpha), n);
                let p = s.predictor().unwrap();
                let mut gs = Array2::from_elem((n + 1, n + 1), ZERO);
                for k in 0..=n {
                    for l in 0..=n {
                        gs[[k, l]] = gs_inverse_entry(p, k, l).unwrap();
                    }
                }
                let dense_inv = dense::inverse(&s.dense()).unwrap();
                let err = dense::frobenius(&(&gs - &dense_inv)) / dense::frobenius(&dense_inv);
                prop_assert!(err < 1e-9, "relative error {}", err);
            }

            #[test]
            fn predictor_reproduces_the_moments(seed in any::<u64>(), alpha in 0.0..=0.5f64, n in 4usize..=64) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let spec = random_spec(&mut rng, alpha);
                let table = fourier_of_symbol(&spec, n).unwrap();
                let s = build_toeplitz(&table, n).unwrap();
                let h = inverse_modulus_coeffs(s.predictor().unwrap().gamma(), n, 1 << 14);
                for (i, v) in h.iter().enumerate() {
                    let lag = i as i64 - n as i64;
                    prop_assert!((v - table.get(lag)).norm() < 1e-8, "s={} got {} want {}", lag, v, table.get(lag));
                }
            }
        }
    }
}
