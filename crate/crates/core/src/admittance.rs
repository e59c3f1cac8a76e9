//! Wavenumber-domain admittance `B` from a reflection matrix, and its
//! spatial counterpart `Bhat` on a planar surface mesh.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bem::Medium;
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::numerics::{hermitian_inv_sqrt_report, singular_values, ComplexMatrix, LuFactor};
use crate::wavespace::WavenumberGrid;

/// `kz / (rho c k)` per mode.
pub fn beta0_diagonal(grid: &WavenumberGrid, medium: &Medium) -> Result<Vec<f64>> {
    let scale = 1.0 / (medium.impedance() * grid.k);
    grid.modes
        .iter()
        .enumerate()
        .map(|(i, m)| {
            if m.kz > 0.0 {
                Ok(m.kz * scale)
            } else {
                Err(Error::InvalidInput(format!("mode {i} has kz = {} <= 0", m.kz)))
            }
        })
        .collect()
}

/// Smallest singular value of `I + Cr` relative to the largest below which
/// the Moebius map is refused.
pub const INVERTIBILITY_RTOL: f64 = 1e-10;

fn shifted(cr: &ComplexMatrix, s: f64) -> ComplexMatrix {
    let mut m = cr.clone();
    for i in 0..m.rows() {
        m[(i, i)] += s;
    }
    m
}

/// `B = B0 (-I + Cr)(I + Cr)^{-1}`, via a transposed linear solve.
pub fn build_b(cr: &ComplexMatrix, b0: &[f64]) -> Result<ComplexMatrix> {
    let m = cr.rows();
    if !cr.is_square() || b0.len() != m {
        return Err(Error::Dimension(format!(
            "Cr is {}x{}, B0 has {} entries",
            cr.rows(),
            cr.cols(),
            b0.len()
        )));
    }
    let plus = shifted(cr, 1.0);
    let minus = shifted(cr, -1.0);
    let sv = singular_values(&plus)?;
    let (smax, smin) = (sv.iter().cloned().fold(0.0, f64::max), sv.iter().cloned().fold(f64::INFINITY, f64::min));
    if !(smin >= INVERTIBILITY_RTOL * smax) {
        return Err(Error::Singular(format!(
            "I + Cr is numerically singular (s_min/s_max = {:.3e}); \
             invertibility needs ||Cr||_op < 1 so the Neumann series converges",
            smin / smax
        )));
    }
    // X (I + Cr) = (Cr - I)  <=>  (I + Cr)^T X^T = (Cr - I)^T
    let lu = LuFactor::new(&plus.transpose())?;
    let x = lu.solve_matrix(&minus.transpose()).transpose();
    Ok(x.scale_rows(b0))
}

/// Inverse of [`build_b`]: with `X = B0^{-1} B`, `Cr = (I - X)^{-1}(I + X)`.
pub fn cr_from_b(b: &ComplexMatrix, b0: &[f64]) -> Result<ComplexMatrix> {
    if !b.is_square() || b0.len() != b.rows() {
        return Err(Error::Dimension("B and B0 sizes differ".into()));
    }
    if b0.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput("B0 must be positive".into()));
    }
    let inv: Vec<f64> = b0.iter().map(|v| 1.0 / v).collect();
    let x = b.scale_rows(&inv);
    let lu = LuFactor::new(&shifted(&x.scale(Complex64::new(-1.0, 0.0)), 1.0))?;
    Ok(lu.solve_matrix(&shifted(&x, 1.0)))
}

/// `B0 (-I + Cr) sum_{n=0}^{terms} (-Cr)^n`, for checking [`build_b`].
pub fn build_b_neumann(cr: &ComplexMatrix, b0: &[f64], terms: usize) -> ComplexMatrix {
    let neg = cr.scale(Complex64::new(-1.0, 0.0));
    let mut power = ComplexMatrix::identity(cr.rows());
    let mut sum = power.clone();
    for _ in 0..terms {
        power = power.matmul(&neg);
        sum = &sum + &power;
    }
    shifted(cr, -1.0).matmul(&sum).scale_rows(b0)
}

/// `[F]_im = (1/2pi) exp(-i k_i . r_m)` over element centers.
pub fn fourier_matrix(surface: &Mesh, grid: &WavenumberGrid) -> Result<ComplexMatrix> {
    check_planar(surface)?;
    let centers = surface.centers();
    Ok(ComplexMatrix::from_rows_par(grid.len(), centers.len(), |i, row| {
        let m = &grid.modes[i];
        for (z, c) in row.iter_mut().zip(&centers) {
            *z = Complex64::from_polar(1.0 / (2.0 * PI), -(m.kx * c[0] + m.ky * c[1]));
        }
    }))
}

fn check_planar(surface: &Mesh) -> Result<()> {
    surface.validate()?;
    let scale = surface.max_diameter().max(1.0);
    if surface.elements.iter().any(|e| e.center[2].abs() > 1e-12 * scale) {
        return Err(Error::Geometry("Fourier basis needs a surface mesh in the plane z = 0".into()));
    }
    Ok(())
}

/// Which Gram matrix the whitening was computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramSide {
    /// `H = W^{1/2} F F^H W^{1/2}` (n_k x n_k), used when `n_k <= N_b`.
    Modes,
    /// `H = F^H W F` (N_b x N_b), used when `n_k > N_b`.
    Elements,
}

#[derive(Clone, Debug)]
pub struct FourierBasis {
    /// n_k x N_b
    pub f: ComplexMatrix,
    pub h: ComplexMatrix,
    /// n_k x N_b
    pub f_white: ComplexMatrix,
    pub weights: Vec<f64>,
    pub side: GramSide,
    /// Gram eigenvalues raised to the floor.
    pub clamped: usize,
}

impl FourierBasis {
    /// Largest entry of the whitening defect on the side where the identity
    /// is attainable: `W^{1/2} F~ F~^H W^{1/2} - I` for [`GramSide::Modes`],
    /// `F~^H W F~ - I` for [`GramSide::Elements`].
    pub fn whitening_defect(&self) -> f64 {
        let sw: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        match self.side {
            GramSide::Modes => {
                let g = self.f_white.scale_rows(&sw);
                let prod = g.matmul(&g.adjoint());
                prod.max_abs_diff(&ComplexMatrix::identity(prod.rows()))
            }
            GramSide::Elements => {
                let g = self.f_white.scale_rows(&sw);
                let prod = g.adjoint().matmul(&g);
                prod.max_abs_diff(&ComplexMatrix::identity(prod.rows()))
            }
        }
    }

    /// `F~^H W F~`; the identity when `n_k >= N_b`, otherwise the orthogonal
    /// projector onto the span of the sampled plane waves.
    pub fn element_gram(&self) -> ComplexMatrix {
        let g = self.f_white.scale_rows(&self.weights.iter().map(|w| w.sqrt()).collect::<Vec<_>>());
        g.adjoint().matmul(&g)
    }
}

/// Fraction of clamped Gram eigenvalues above which a warning is logged.
const CLAMP_WARN_FRACTION: f64 = 0.1;

/// Raw and whitened Fourier matrices for `surface` and `grid`.
///
/// With `n_k <= N_b`, `F^H W F` is rank deficient, so the whitening uses the
/// mode-side Gram: `F~ = W^{-1/2} H^{-1/2} W^{1/2} F`. This equals
/// `F (F^H W F)^{+1/2}` and satisfies `W^{1/2} F~ F~^H W^{1/2} = I`.
pub fn fourier_basis(surface: &Mesh, grid: &WavenumberGrid, eig_floor: Option<f64>) -> Result<FourierBasis> {
    let f = fourier_matrix(surface, grid)?;
    let weights = grid.weights();
    let (n_k, n_b) = f.shape();
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let (side, h, f_white, clamped) = if n_k <= n_b {
        let g = f.scale_rows(&sw);
        let h = g.matmul(&g.adjoint());
        let inv = hermitian_inv_sqrt_report(&h, eig_floor)?;
        let isw: Vec<f64> = sw.iter().map(|s| 1.0 / s).collect();
        let f_white = inv.matrix.matmul(&g).scale_rows(&isw);
        (GramSide::Modes, h, f_white, inv.clamped)
    } else {
        let g = f.scale_rows(&sw);
        let h = g.adjoint().matmul(&g);
        let inv = hermitian_inv_sqrt_report(&h, eig_floor)?;
        let f_white = f.matmul(&inv.matrix);
        (GramSide::Elements, h, f_white, inv.clamped)
    };
    if clamped as f64 > CLAMP_WARN_FRACTION * h.rows() as f64 {
        log::warn!(
            "Fourier Gram: {clamped} of {} eigenvalues clamped; the surface cannot resolve these modes",
            h.rows()
        );
    }
    Ok(FourierBasis {
        f,
        h,
        f_white,
        weights,
        side,
        clamped,
    })
}

/// `Bhat = F~^H W B F~`.
pub fn spatial_admittance(f_white: &ComplexMatrix, weights: &[f64], b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n_k = f_white.rows();
    if b.shape() != (n_k, n_k) || weights.len() != n_k {
        return Err(Error::Dimension(format!(
            "B is {}x{}, weights {}, basis has {n_k} modes",
            b.rows(),
            b.cols(),
            weights.len()
        )));
    }
    let wbf = b.matmul(f_white).scale_rows(weights);
    Ok(f_white.adjoint().matmul(&wbf))
}

/// Everything between a reflection matrix and the nonlocal boundary condition.
#[derive(Clone, Debug)]
pub struct AdmittanceSet {
    pub b0: Vec<f64>,
    pub b: ComplexMatrix,
    pub basis: FourierBasis,
    pub bhat: ComplexMatrix,
}

pub fn admittance_set(
    cr: &ComplexMatrix,
    grid: &WavenumberGrid,
    medium: &Medium,
    surface: &Mesh,
) -> Result<AdmittanceSet> {
    if (grid.k - medium.k()).abs() > 1e-12 * medium.k() {
        return Err(Error::InvalidInput(format!(
            "grid wavenumber {} differs from medium wavenumber {}",
            grid.k,
            medium.k()
        )));
    }
    let b0 = beta0_diagonal(grid, medium)?;
    let b = build_b(cr, &b0)?;
    let basis = fourier_basis(surface, grid, None)?;
    let defect = basis.whitening_defect();
    if defect > 1e-8 {
        log::warn!("whitening identity defect {defect:.3e}");
    }
    let bhat = spatial_admittance(&basis.f_white, &basis.weights, &b)?;
    Ok(AdmittanceSet { b0, b, basis, bhat })
}
