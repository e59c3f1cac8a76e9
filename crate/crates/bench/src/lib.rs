//! Fixtures shared by the benches. Inputs are deterministic so timings are
//! comparable across runs.

use std::f64::consts::PI;

use wnrefl_core::bem::Medium;
use wnrefl_core::estimation::SpectraPair;
use wnrefl_core::wavespace::fibonacci_wavenumber_grid;
use wnrefl_core::{Complex64, ComplexMatrix};

pub fn medium(f: f64) -> Medium {
    Medium::new(343.5, 1.205, f).expect("valid medium")
}

/// Dense, well-conditioned pseudo-random matrix.
pub fn scrambled(rows: usize, cols: usize, seed: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| {
        let t = seed + 0.618_033_988_75 * (i * cols + j) as f64;
        let u = (t * 12.9898).sin() * 43_758.545_3;
        Complex64::from_polar(1.0, 2.0 * PI * (u - u.floor()))
    })
}

/// Spectra from a near-diagonal reflection matrix, `m` modes, `q` sources.
pub fn specular_spectra(m: usize, q: usize) -> SpectraPair {
    let truth = ComplexMatrix::from_fn(m, m, |i, j| match i.abs_diff(j) {
        0 => Complex64::new(0.8, 0.0),
        1 => Complex64::new(0.05, 0.02),
        _ => Complex64::new(0.0, 0.0),
    });
    let p_i = scrambled(m, q, 0.3);
    let p_r = truth.matmul(&p_i);
    let grid = fibonacci_wavenumber_grid(m, 2.0 * PI * 1700.0 / 343.5).expect("valid grid");
    SpectraPair::new(p_i, p_r, grid).expect("consistent spectra")
}
