//! Gauss rules for power-law endpoint singularities and a geometrically
//! graded composite integrator built on them.

use crate::special::gamma;

/// A Gauss rule on `[0, 1]` for the weight `s^p`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub exponent: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss–Legendre rule on `[0, 1]`.
    pub fn legendre(n: usize) -> Self {
        Self::jacobi_unit(n, 0.0)
    }

    /// Gauss–Jacobi rule on `[0, 1]` exact for `s^p` times polynomials of
    /// degree below `2n`. Requires `p > -1`.
    pub fn jacobi_unit(n: usize, p: f64) -> Self {
        let (x, w) = gauss_jacobi(n, 0.0, p);
        let scale = 0.5f64.powf(p + 1.0);
        GaussRule {
            exponent: p,
            nodes: x.iter().map(|xi| 0.5 * (xi + 1.0)).collect(),
            weights: w.iter().map(|wi| wi * scale).collect(),
        }
    }

    /// `∫_0^h s^p f(s) ds`.
    pub fn integrate_weighted<F: Fn(f64) -> f64>(&self, h: f64, f: F) -> f64 {
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(h * x);
        }
        acc * h.powf(self.exponent + 1.0)
    }

    /// `∫_a^b f(s) ds`, ignoring the weight exponent (only meaningful for
    /// Legendre rules).
    pub fn integrate_interval<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let h = b - a;
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(a + h * x);
        }
        acc * h
    }
}

/// Nodes and weights of the `n`-point Gauss–Jacobi rule on `[-1, 1]` for the
/// weight `(1-x)^a (1+x)^b`, via the Golub–Welsch eigenproblem.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && a > -1.0 && b > -1.0);
    let ab = a + b;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    diag[0] = (b - a) / (ab + 2.0);
    for (i, d) in diag.iter_mut().enumerate().skip(1) {
        let k = i as f64;
        let t = 2.0 * k + ab;
        *d = (b * b - a * a) / (t * (t + 2.0));
    }
    for i in 1..n {
        let k = i as f64;
        let t = 2.0 * k + ab;
        let beta = if i == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * k * (k + a) * (k + b) * (k + ab) / (t * t * (t + 1.0) * (t - 1.0))
        };
        off[i - 1] = beta.sqrt();
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(ab + 2.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    tridiagonal_ql(&mut diag, &mut off, &mut z);
    let mut pairs: Vec<(f64, f64)> = diag.into_iter().zip(z.into_iter().map(|v| mu0 * v * v)).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    pairs.into_iter().unzip()
}

/// Implicit QL iteration for a symmetric tridiagonal matrix. On exit `d`
/// holds the eigenvalues and `z` the first components of the normalized
/// eigenvectors (given `z = e_0` on entry).
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    if n == 0 {
        return;
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 100, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let fz = z[i + 1];
                z[i + 1] = s * z[i] + c * fz;
                z[i] = c * z[i] - s * fz;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Composite integrator for `∫_0^len s^p f(s) ds` where `f` is smooth on
/// `[0, len]` but may have nearby singularities at `s = -near_left` and
/// `s = len + near_right`.
///
/// The first panel carries the Gauss–Jacobi weight; the remaining panels are
/// graded geometrically so that each panel is no wider than its distance to
/// the closest singularity.
#[derive(Debug, Clone)]
pub struct GradedIntegrator {
    jacobi: GaussRule,
    legendre: GaussRule,
}

impl GradedIntegrator {
    pub fn new(p: f64, jacobi_nodes: usize, legendre_nodes: usize) -> Self {
        GradedIntegrator {
            jacobi: GaussRule::jacobi_unit(jacobi_nodes, p),
            legendre: GaussRule::legendre(legendre_nodes),
        }
    }

    pub fn exponent(&self) -> f64 {
        self.jacobi.exponent
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, len: f64, near_left: f64, near_right: f64) -> f64 {
        if len <= 0.0 {
            return 0.0;
        }
        let mut cuts = Vec::with_capacity(64);
        let mut b = near_left.min(len);
        cuts.push(b);
        while b < len {
            b = (2.0 * b).min(len);
            cuts.push(b);
        }
        if near_right.is_finite() {
            let mut r = near_right;
            while r < len {
                cuts.push(len - r);
                r *= 2.0;
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * len);
        let p = self.jacobi.exponent;
        let first = cuts[0];
        let mut total = self.jacobi.integrate_weighted(first, &f);
        let mut a = first;
        for &c in &cuts[1..] {
            if c > a {
                total += self.legendre.integrate_interval(a, c, |s| s.powf(p) * f(s));
                a = c;
            }
        }
        total
    }
}
