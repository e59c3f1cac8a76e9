//! Propagating plane-wave modes over the wavenumber disk and the transforms
//! between boundary-plane fields and their spectra.
//!
//! Fourier pair: forward `(1/2pi) integral f e^{-i k.r}`, inverse
//! `(1/2pi) integral f_hat e^{+i k.r}`. Incident waves travel toward the
//! boundary (`e^{-i kz z}`), reflected waves away from it (`e^{+i kz z}`).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{fibonacci_hemisphere, ReceiverGrid, GOLDEN_ANGLE};
use crate::numerics::ComplexMatrix;
use crate::Vec3;

const INV_2PI: f64 = 1.0 / (2.0 * PI);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub kx: f64,
    pub ky: f64,
    pub kz: f64,
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WavenumberGrid {
    pub k: f64,
    pub modes: Vec<Mode>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Toward the boundary, `kz < 0` in the field.
    Incident,
    /// Away from the boundary.
    Reflected,
}

impl Direction {
    fn z_sign(self) -> f64 {
        match self {
            Direction::Incident => -1.0,
            Direction::Reflected => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
    pub direction: Direction,
}

impl Spectrum {
    pub fn zeros(m: usize, direction: Direction) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); m],
            direction,
        }
    }

    pub fn one_hot(m: usize, index: usize, direction: Direction) -> Self {
        let mut s = Self::zeros(m, direction);
        s.values[index] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn argmax(&self) -> usize {
        argmax_modulus(&self.values)
    }
}

pub fn argmax_modulus(v: &[Complex64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, z)| {
            let a = z.norm();
            if a > best.1 {
                (i, a)
            } else {
                best
            }
        })
        .0
}

/// Window applied to receiver samples before the plane transform.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Window {
    #[default]
    Rectangular,
    /// Separable Tukey window with taper fraction `alpha` in `[0, 1]`.
    Tukey(f64),
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Tukey(alpha) => (0..n).map(|i| tukey(i, n, alpha)).collect(),
        }
    }
}

fn tukey(i: usize, n: usize, alpha: f64) -> f64 {
    if n <= 1 || alpha <= 0.0 {
        return 1.0;
    }
    let x = i as f64 / (n - 1) as f64;
    let half = 0.5 * alpha;
    if x < half {
        0.5 * (1.0 + (PI * (x / half - 1.0)).cos())
    } else if x > 1.0 - half {
        0.5 * (1.0 + (PI * ((x - 1.0) / half + 1.0)).cos())
    } else {
        1.0
    }
}

impl WavenumberGrid {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.weight).collect()
    }

    pub fn weight_sum(&self) -> f64 {
        self.modes.iter().map(|m| m.weight).sum()
    }

    /// Mode whose in-plane wavenumber is closest to `(kx, ky)`.
    pub fn nearest_mode(&self, kx: f64, ky: f64) -> usize {
        self.modes
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, m)| {
                let d = (m.kx - kx).powi(2) + (m.ky - ky).powi(2);
                if d < best.1 {
                    (i, d)
                } else {
                    best
                }
            })
            .0
    }

    /// Mode nearest to the plane wave arriving from polar angle `theta`
    /// (radians from the normal) in the x-z plane.
    pub fn mode_for_angle(&self, theta: f64) -> Result<usize> {
        if !(0.0..PI / 2.0).contains(&theta) {
            return Err(Error::InvalidInput(format!(
                "incidence angle {:.3} deg outside [0, 90)",
                theta.to_degrees()
            )));
        }
        Ok(self.nearest_mode(self.k * theta.sin(), 0.0))
    }

    pub fn check(&self) -> Result<()> {
        if !(self.k > 0.0) || self.modes.is_empty() {
            return Err(Error::InvalidInput("wavenumber grid needs k > 0 and modes".into()));
        }
        for (i, m) in self.modes.iter().enumerate() {
            let r = (m.kx * m.kx + m.ky * m.ky + m.kz * m.kz - self.k * self.k).abs() / (self.k * self.k);
            if !(m.kz > 0.0) || !(m.weight > 0.0) || r > 1e-10 {
                return Err(Error::InvalidInput(format!("mode {i} is not a propagating mode")));
            }
        }
        Ok(())
    }
}

/// `M` modes on the Fibonacci hemisphere with `w_n = 2 pi k kz_n / M`.
pub fn fibonacci_wavenumber_grid(m: usize, k: f64) -> Result<WavenumberGrid> {
    if m == 0 || !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidInput(format!("wavenumber grid with M = {m}, k = {k}")));
    }
    let modes = fibonacci_hemisphere(m)
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            let kz = k * d[2];
            Mode {
                kx: k * d[0],
                ky: k * d[1],
                kz,
                theta: d[2].clamp(-1.0, 1.0).acos(),
                phi: (GOLDEN_ANGLE * i as f64).rem_euclid(2.0 * PI),
                weight: 2.0 * PI * k * kz / m as f64,
            }
        })
        .collect();
    Ok(WavenumberGrid { k, modes })
}

fn kernel(mode: &Mode, p: Vec3, sign: f64) -> Complex64 {
    Complex64::from_polar(INV_2PI, mode.kx * p[0] + mode.ky * p[1] + sign * mode.kz * p[2])
}

/// `[p, m] = (1/2pi) exp(i(kx x + ky y -/+ kz z))`, `-` for incident.
pub fn steering_matrix(points: &[Vec3], grid: &WavenumberGrid, direction: Direction) -> Result<ComplexMatrix> {
    if points.is_empty() {
        return Err(Error::InvalidInput("steering matrix needs at least one point".into()));
    }
    let sign = direction.z_sign();
    Ok(ComplexMatrix::from_rows_par(points.len(), grid.len(), |i, row| {
        for (z, mode) in row.iter_mut().zip(&grid.modes) {
            *z = kernel(mode, points[i], sign);
        }
    }))
}

/// Field of a spectrum at arbitrary points:
/// `sum_m s_m w_m (1/2pi) exp(i(kx x + ky y -/+ kz z))`.
pub fn synthesize_field(spectrum: &Spectrum, grid: &WavenumberGrid, points: &[Vec3]) -> Result<Vec<Complex64>> {
    if spectrum.values.len() != grid.len() {
        return Err(Error::Dimension(format!(
            "spectrum has {} entries, grid has {} modes",
            spectrum.values.len(),
            grid.len()
        )));
    }
    let sign = spectrum.direction.z_sign();
    Ok(points
        .iter()
        .map(|&p| {
            grid.modes
                .iter()
                .zip(&spectrum.values)
                .map(|(mode, s)| s * mode.weight * kernel(mode, p, sign))
                .sum()
        })
        .collect())
}

/// Checks that receiver positions form the regular grid their metadata claims.
pub fn check_receiver_grid(receivers: &ReceiverGrid) -> Result<()> {
    if receivers.positions.len() != receivers.nx * receivers.ny || receivers.positions.is_empty() {
        return Err(Error::InvalidInput(format!(
            "receiver grid has {} points, expected {} x {}",
            receivers.positions.len(),
            receivers.nx,
            receivers.ny
        )));
    }
    let origin = receivers.positions[0];
    let tol = 1e-9 * receivers.spacing.max(1.0);
    for iy in 0..receivers.ny {
        for ix in 0..receivers.nx {
            let p = receivers.positions[iy * receivers.nx + ix];
            let want = [
                origin[0] + ix as f64 * receivers.spacing,
                origin[1] + iy as f64 * receivers.spacing,
                receivers.height,
            ];
            if (0..3).any(|d| (p[d] - want[d]).abs() > tol) {
                return Err(Error::InvalidInput(format!(
                    "receiver ({ix}, {iy}) at {p:?} breaks the regular grid"
                )));
            }
        }
    }
    Ok(())
}

/// Linear map from receiver pressures to a spectrum referred to `z = 0`:
/// rectangular-rule plane transform at the receiver height, then
/// back-propagation by `e^{+i kz h}` (incident) or `e^{-i kz h}` (reflected).
pub fn analysis_matrix(
    receivers: &ReceiverGrid,
    grid: &WavenumberGrid,
    direction: Direction,
    window: Window,
) -> Result<ComplexMatrix> {
    check_receiver_grid(receivers)?;
    if let Window::Tukey(a) = window {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidInput(format!("Tukey alpha {a} outside [0, 1]")));
        }
    }
    let (wx, wy) = (window.weights(receivers.nx), window.weights(receivers.ny));
    let cell = receivers.spacing * receivers.spacing * INV_2PI;
    let h = receivers.height;
    let back = -direction.z_sign();
    let nx = receivers.nx;
    Ok(ComplexMatrix::from_rows_par(grid.len(), receivers.len(), |m, row| {
        let mode = &grid.modes[m];
        let prop = Complex64::from_polar(cell, back * mode.kz * h);
        for (j, z) in row.iter_mut().enumerate() {
            let p = receivers.positions[j];
            let taper = wx[j % nx] * wy[j / nx];
            *z = prop * taper * Complex64::from_polar(1.0, -(mode.kx * p[0] + mode.ky * p[1]));
        }
    }))
}

pub fn spectrum_from_plane(
    pressures: &[Complex64],
    receivers: &ReceiverGrid,
    grid: &WavenumberGrid,
    direction: Direction,
) -> Result<Spectrum> {
    spectrum_from_plane_windowed(pressures, receivers, grid, direction, Window::Rectangular)
}

pub fn spectrum_from_plane_windowed(
    pressures: &[Complex64],
    receivers: &ReceiverGrid,
    grid: &WavenumberGrid,
    direction: Direction,
    window: Window,
) -> Result<Spectrum> {
    if pressures.len() != receivers.len() {
        return Err(Error::Dimension(format!(
            "{} pressures for {} receivers",
            pressures.len(),
            receivers.len()
        )));
    }
    let a = analysis_matrix(receivers, grid, direction, window)?;
    Ok(Spectrum {
        values: a.mul_vec(pressures),
        direction,
    })
}
