//! Complex LASSO by cyclic coordinate descent.
//!
//! Objective: `||A x - b||^2 + lambda * sum_j |x_j|`, no `1/2` or `1/Q`
//! factor. Each coordinate minimization is a complex soft-threshold that
//! shrinks the modulus and keeps the phase.

use num_complex::Complex64;

use super::matrix::{norm2, ComplexMatrix};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub struct LassoResult {
    pub x: Vec<Complex64>,
    pub converged: bool,
    /// Total coordinate sweeps performed (full and active-set).
    pub sweeps: usize,
    pub objective: f64,
}

/// Solves one LASSO problem. Returns the last iterate with
/// `converged = false` if `max_iter` sweeps did not reach `tol`.
pub fn complex_lasso(
    a: &ComplexMatrix,
    b: &[Complex64],
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<LassoResult> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "lasso: A has {} rows, b has {} entries",
            a.rows(),
            b.len()
        )));
    }
    let gram = LassoGram::new(a)?;
    let c = gram.correlate(a, b);
    let bb = norm2(b).powi(2);
    gram.solve(&c, bb, lambda, max_iter, tol, None)
}

/// Precomputed `A^H A` shared by many right-hand sides with the same design.
#[derive(Clone, Debug)]
pub struct LassoGram {
    g: ComplexMatrix,
    diag: Vec<f64>,
}

impl LassoGram {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::Dimension("lasso: empty design matrix".into()));
        }
        a.ensure_finite("lasso design matrix")?;
        let g = a.adjoint().matmul(a);
        let diag: Vec<f64> = g.diagonal().iter().map(|z| z.re).collect();
        if diag.iter().all(|&d| d <= 0.0) {
            return Err(Error::InvalidInput("lasso: all columns of A are zero".into()));
        }
        Ok(Self { g, diag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn gram(&self) -> &ComplexMatrix {
        &self.g
    }

    /// `A^H b`
    pub fn correlate(&self, a: &ComplexMatrix, b: &[Complex64]) -> Vec<Complex64> {
        let m = self.dim();
        let mut c = vec![ZERO; m];
        for (q, bq) in b.iter().enumerate() {
            for (j, cj) in c.iter_mut().enumerate() {
                *cj += a[(q, j)].conj() * bq;
            }
        }
        c
    }

    /// `||A x - b||^2 + lambda ||x||_1` from Gram quantities.
    pub fn objective(&self, x: &[Complex64], c: &[Complex64], b_norm_sq: f64, lambda: f64) -> f64 {
        let gx = self.g.mul_vec(x);
        let xgx: f64 = x.iter().zip(&gx).map(|(xi, gi)| (xi.conj() * gi).re).sum();
        let xc: f64 = x.iter().zip(c).map(|(xi, ci)| (xi.conj() * ci).re).sum();
        let l1: f64 = x.iter().map(|z| z.norm()).sum();
        (xgx - 2.0 * xc + b_norm_sq).max(0.0) + lambda * l1
    }

    /// Coordinate descent given `c = A^H b` and `b_norm_sq = ||b||^2`.
    ///
    /// Alternates full sweeps with sweeps over the current support; stops
    /// when a full sweep moves no coordinate by more than `tol`.
    pub fn solve(
        &self,
        c: &[Complex64],
        b_norm_sq: f64,
        lambda: f64,
        max_iter: usize,
        tol: f64,
        warm_start: Option<&[Complex64]>,
    ) -> Result<LassoResult> {
        let m = self.dim();
        if c.len() != m {
            return Err(Error::Dimension(format!("lasso: c has {} entries, expected {m}", c.len())));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("lasso: lambda {lambda} must be finite and >= 0")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("lasso: tol {tol} must be > 0")));
        }
        let mut x = match warm_start {
            Some(w) if w.len() == m => w.to_vec(),
            Some(w) => {
                return Err(Error::Dimension(format!("lasso: warm start has {} entries", w.len())))
            }
            None => vec![ZERO; m],
        };
        // Residual correlation r = c - G x.
        let mut r = c.to_vec();
        if warm_start.is_some() {
            let gx = self.g.mul_vec(&x);
            for (ri, gi) in r.iter_mut().zip(&gx) {
                *ri -= gi;
            }
        }

        let mut sweeps = 0;
        let mut converged = false;
        let all: Vec<usize> = (0..m).collect();
        while sweeps < max_iter {
            let delta = self.sweep(&all, &mut x, &mut r, lambda);
            sweeps += 1;
            if delta < tol {
                converged = true;
                break;
            }
            let active: Vec<usize> = (0..m).filter(|&j| x[j] != ZERO).collect();
            while sweeps < max_iter {
                let d = self.sweep(&active, &mut x, &mut r, lambda);
                sweeps += 1;
                if d < tol {
                    break;
                }
            }
        }
        let objective = self.objective(&x, c, b_norm_sq, lambda);
        Ok(LassoResult {
            x,
            converged,
            sweeps,
            objective,
        })
    }

    fn sweep(&self, coords: &[usize], x: &mut [Complex64], r: &mut [Complex64], lambda: f64) -> f64 {
        let mut max_delta: f64 = 0.0;
        for &j in coords {
            let d = self.diag[j];
            if d <= 0.0 {
                continue;
            }
            let z = x[j] + r[j] / d;
            let zn = z.norm();
            let shrink = if zn > 0.0 {
                (1.0 - lambda / (2.0 * d * zn)).max(0.0)
            } else {
                0.0
            };
            let new = z * shrink;
            let step = new - x[j];
            if step != ZERO {
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri -= self.g[(i, j)] * step;
                }
                x[j] = new;
                max_delta = max_delta.max(step.norm());
            }
        }
        max_delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_soft_threshold() {
        let a = ComplexMatrix::identity(2);
        let b = [c(3.0, 4.0), c(0.1, 0.0)];
        let res = complex_lasso(&a, &b, 1.0, 100, 1e-12).unwrap();
        assert!(res.converged);
        assert!((res.x[0] - c(2.7, 3.6)).norm() < 1e-12);
        assert_eq!(res.x[1], c(0.0, 0.0));
    }

    #[test]
    fn scalar_solution_beats_grid_search() {
        // 1x1 problem: |x - z|^2 + lam |x| over a polar grid.
        let a = ComplexMatrix::identity(1);
        let z = c(-1.2, 0.7);
        let lam = 0.9;
        let res = complex_lasso(&a, &[z], lam, 100, 1e-14).unwrap();
        let f = |x: Complex64| (x - z).norm_sqr() + lam * x.norm();
        let best = (0..400)
            .flat_map(|ri| {
                (0..360).map(move |ti| {
                    Complex64::from_polar(ri as f64 * 0.005, (ti as f64).to_radians())
                })
            })
            .map(f)
            .fold(f64::INFINITY, f64::min);
        assert!(f(res.x[0]) <= best + 1e-12);
    }

    #[test]
    fn zero_design_is_rejected() {
        let a = ComplexMatrix::zeros(3, 2);
        assert!(complex_lasso(&a, &[c(1.0, 0.0); 3], 0.1, 10, 1e-8).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let a = ComplexMatrix::from_fn(4, 3, |i, j| c(1.0 + (i * j) as f64, 0.5 * i as f64));
        let b = [c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(-1.0, 0.3)];
        let res = complex_lasso(&a, &b, 0.0, 1, 1e-15).unwrap();
        assert!(!res.converged);
        assert_eq!(res.sweeps, 1);
    }
}
