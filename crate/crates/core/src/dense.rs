//! Small dense complex linear algebra used as reference implementations.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
pub fn lu_solve(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension { expected: n, got: a.ncols() });
    }
    if b.nrows() != n {
        return Err(Error::Dimension { expected: n, got: b.nrows() });
    }
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, m[[r, col]].norm()))
            .fold((col, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if pmax == 0.0 {
            return Err(Error::Domain("singular matrix".into()));
        }
        if piv != col {
            for j in 0..n {
                m.swap([piv, j], [col, j]);
            }
            for j in 0..x.ncols() {
                x.swap([piv, j], [col, j]);
            }
        }
        let d = m[[col, col]];
        for r in col + 1..n {
            let f = m[[r, col]] / d;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let v = m[[col, j]];
                m[[r, j]] -= f * v;
            }
            for j in 0..x.ncols() {
                let v = x[[col, j]];
                x[[r, j]] -= f * v;
            }
        }
    }
    for j in 0..x.ncols() {
        for r in (0..n).rev() {
            let mut acc = x[[r, j]];
            for c in r + 1..n {
                acc -= m[[r, c]] * x[[c, j]];
            }
            x[[r, j]] = acc / m[[r, r]];
        }
    }
    Ok(x)
}

pub fn inverse(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    lu_solve(a, &Array2::eye(a.nrows()))
}

pub fn matvec(a: &Array2<Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    a.rows().into_iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub fn adjoint(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}

pub fn frobenius(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn to_complex(a: &Array2<f64>) -> Array2<Complex64> {
    a.mapv(|v| Complex64::new(v, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_small_matrix() {
        let c = |r: f64, i: f64| Complex64::new(r, i);
        let a = Array2::from_shape_vec((3, 3), vec![c(0.0, 0.0), c(2.0, 1.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0), c(0.0, -1.0), c(4.0, 0.0), c(1.0, 1.0), c(2.0, 0.0)]).unwrap();
        let inv = inverse(&a).unwrap();
        let prod = a.dot(&inv);
        let err = frobenius(&(prod - Array2::<Complex64>::eye(3)));
        assert!(err < 1e-14);
    }
}
