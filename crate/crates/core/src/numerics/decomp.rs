//! SVD, pseudoinverse, Hermitian inverse square root and LU solves.
//!
//! Factorizations are delegated to `faer`; everything built on top of them
//! (truncation, clamping, condition estimation) lives here.

use faer::linalg::solvers::{PartialPivLu, SolveCore};
use faer::{Conj, Mat, Side};
use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_PINV_RTOL: f64 = 1e-12;
pub const DEFAULT_EIG_FLOOR_REL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;

/// Thin singular value decomposition `A = U diag(s) V^H`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let s: Vec<f64> = self.singular_values.clone();
        self.u.scale_cols(&s).matmul(&self.v.adjoint())
    }
}

pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    if a.is_empty() {
        return Err(Error::Dimension("SVD of an empty matrix".into()));
    }
    a.ensure_finite("SVD input")?;
    let m = a.to_faer();
    let dec = m.thin_svd().map_err(|_| Error::SvdFailed {
        rows: a.rows(),
        cols: a.cols(),
    })?;
    let singular_values: Vec<f64> = dec.S().column_vector().iter().map(|s| s.re).collect();
    Ok(SvdResult {
        singular_values,
        u: ComplexMatrix::from_faer(dec.U()),
        v: ComplexMatrix::from_faer(dec.V()),
    })
}

pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(Error::Dimension("singular values of an empty matrix".into()));
    }
    a.ensure_finite("singular value input")?;
    a.to_faer().singular_values().map_err(|_| Error::SvdFailed {
        rows: a.rows(),
        cols: a.cols(),
    })
}

/// Moore-Penrose pseudoinverse with relative truncation of small singular
/// values. See [`pinv_with_rank`].
pub fn pinv(a: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    pinv_with_rank(a, rel_tol).map(|(p, _)| p)
}

/// Pseudoinverse plus the number of singular values kept
/// (those `>= rel_tol * s_max`).
pub fn pinv_with_rank(a: &ComplexMatrix, rel_tol: f64) -> Result<(ComplexMatrix, usize)> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidInput(format!("pinv rel_tol {rel_tol} outside (0,1)")));
    }
    let dec = svd(a)?;
    let s_max = dec.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = rel_tol * s_max;
    let inv: Vec<f64> = dec
        .singular_values
        .iter()
        .map(|&s| if s > 0.0 && s >= cutoff { 1.0 / s } else { 0.0 })
        .collect();
    let rank = inv.iter().filter(|&&x| x != 0.0).count();
    let p = dec.v.scale_cols(&inv).matmul(&dec.u.adjoint());
    Ok((p, rank))
}

/// Result of [`hermitian_inv_sqrt_report`].
#[derive(Clone, Debug)]
pub struct InvSqrt {
    pub matrix: ComplexMatrix,
    /// Ascending eigenvalues before clamping.
    pub eigenvalues: Vec<f64>,
    pub floor: f64,
    pub clamped: usize,
}

/// `H^{-1/2}` for a Hermitian positive semi-definite `H`; eigenvalues below
/// `eig_floor` (default `1e-10 * lambda_max`) are raised to the floor first.
pub fn hermitian_inv_sqrt(h: &ComplexMatrix, eig_floor: Option<f64>) -> Result<ComplexMatrix> {
    hermitian_inv_sqrt_report(h, eig_floor).map(|r| r.matrix)
}

pub fn hermitian_inv_sqrt_report(h: &ComplexMatrix, eig_floor: Option<f64>) -> Result<InvSqrt> {
    let eig = hermitian_eigen(h)?;
    let lambda_max = eig.values.last().copied().unwrap_or(0.0);
    let floor = eig_floor.unwrap_or(DEFAULT_EIG_FLOOR_REL * lambda_max);
    if !(floor >= 0.0) {
        return Err(Error::InvalidInput(format!("eigenvalue floor {floor} is negative")));
    }
    if lambda_max <= 0.0 || eig.values.iter().all(|&l| l < floor) {
        return Err(Error::DegenerateGram(format!(
            "all {} eigenvalues below floor {floor:.3e} (lambda_max {lambda_max:.3e})",
            eig.values.len()
        )));
    }
    let floor_eff = if floor > 0.0 { floor } else { f64::MIN_POSITIVE };
    let mut clamped = 0;
    let scales: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| {
            if l < floor_eff {
                clamped += 1;
                1.0 / floor_eff.sqrt()
            } else {
                1.0 / l.sqrt()
            }
        })
        .collect();
    let matrix = eig.vectors.scale_cols(&scales).matmul(&eig.vectors.adjoint());
    Ok(InvSqrt {
        matrix,
        eigenvalues: eig.values,
        floor,
        clamped,
    })
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<HermitianEigen> {
    if !h.is_square() || h.is_empty() {
        return Err(Error::Dimension(format!(
            "Hermitian eigendecomposition needs a nonempty square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    h.ensure_finite("Hermitian eigendecomposition input")?;
    let defect = h.hermitian_defect();
    if defect > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let dec = h
        .to_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenFailed { n: h.rows() })?;
    Ok(HermitianEigen {
        values: dec.S().column_vector().iter().map(|s| s.re).collect(),
        vectors: ComplexMatrix::from_faer(dec.U()),
    })
}

/// LU factorization with partial pivoting, reusable across right-hand sides.
pub struct LuFactor {
    lu: PartialPivLu<Complex64>,
    n: usize,
    norm1: f64,
}

impl std::fmt::Debug for LuFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuFactor").field("n", &self.n).finish()
    }
}

impl LuFactor {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() || a.is_empty() {
            return Err(Error::Dimension(format!(
                "LU needs a nonempty square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        a.ensure_finite("LU input")?;
        let n = a.rows();
        let norm1 = (0..n)
            .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let lu = a.to_faer().partial_piv_lu();
        let u = lu.U();
        let mut min_pivot = f64::INFINITY;
        for i in 0..n {
            min_pivot = min_pivot.min(u[(i, i)].norm());
        }
        if !(min_pivot > 0.0) {
            return Err(Error::Singular(format!("zero pivot in {n}x{n} LU factorization")));
        }
        Ok(Self { lu, n, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n);
        let mut rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place_with_conj(Conj::No, rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n);
        let mut rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_transpose_in_place_with_conj(Conj::Yes, rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }

    pub fn solve_matrix(&self, b: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(b.rows(), self.n);
        let mut rhs = b.to_faer();
        self.lu.solve_in_place_with_conj(Conj::No, rhs.as_mut());
        ComplexMatrix::from_faer(rhs.as_ref())
    }

    /// 1-norm condition number estimate (Hager's method).
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.iter().map(|z| z.norm()).sum::<f64>();
            if !est.is_finite() {
                return f64::INFINITY;
            }
            let xi: Vec<Complex64> = y
                .iter()
                .map(|z| {
                    let r = z.norm();
                    if r > 0.0 {
                        z / r
                    } else {
                        Complex64::new(1.0, 0.0)
                    }
                })
                .collect();
            let z = self.solve_adjoint(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![Complex64::new(0.0, 0.0); n];
            x[j] = Complex64::new(1.0, 0.0);
        }
        est * self.norm1
    }
}

/// Solves `A x = b` for square `A`.
pub fn solve(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    Ok(LuFactor::new(a)?.solve(b))
}
