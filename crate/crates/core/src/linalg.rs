//! Small dense SPD solver.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Lower Cholesky factor of a dense symmetric positive definite matrix.
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors the row-major `n x n` matrix `a`.
    pub fn factor(n: usize, a: &[f64]) -> Result<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut lower = a.to_vec();
        for j in 0..n {
            let mut d = lower[j * n + j];
            for k in 0..j {
                d -= lower[j * n + k] * lower[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::Numerical { residual: d, reason: alloc::format!("matrix is not positive definite at pivot {j}") });
            }
            let d = libm::sqrt(d);
            lower[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = lower[i * n + j];
                let (ri, rj) = (i * n, j * n);
                for k in 0..j {
                    s -= lower[ri + k] * lower[rj + k];
                }
                lower[i * n + j] = s / d;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                lower[i * n + j] = 0.0;
            }
        }
        Ok(Self { n, lower })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        y
    }
}

/// `‖A x − b‖∞` for a row-major `n x n` matrix.
pub fn residual_inf(n: usize, a: &[f64], x: &[f64], b: &[f64]) -> f64 {
    (0..n)
        .map(|i| {
            let ax: f64 = a[i * n..(i + 1) * n].iter().zip(x).map(|(p, q)| p * q).sum();
            (ax - b[i]).abs()
        })
        .fold(0.0, f64::max)
}

/// Solves `A x = b` by Cholesky with one step of iterative refinement and
/// fails if the residual exceeds `tol`.
pub fn solve_spd(n: usize, a: &[f64], b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let chol = Cholesky::factor(n, a)?;
    let mut x = chol.solve(b);
    let r: Vec<f64> = (0..n)
        .map(|i| b[i] - a[i * n..(i + 1) * n].iter().zip(&x).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    let dx = chol.solve(&r);
    x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
    let res = residual_inf(n, a, &x, b);
    if !(res <= tol) {
        return Err(Error::Numerical { residual: res, reason: "linear solve missed its residual bound".into() });
    }
    Ok(x)
}
