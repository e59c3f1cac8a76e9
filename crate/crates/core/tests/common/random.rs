use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wnrefl_core::numerics::spectral_norm;
use wnrefl_core::{Complex64, ComplexMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cnormal(r: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(r.sample(StandardNormal), r.sample(StandardNormal))
}

pub fn matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| cnormal(r))
}

pub fn vector(r: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| cnormal(r)).collect()
}

/// Random square matrix rescaled to spectral norm `target`.
pub fn with_spectral_norm(r: &mut ChaCha8Rng, n: usize, target: f64) -> ComplexMatrix {
    let m = matrix(r, n, n);
    let s = spectral_norm(&m).unwrap();
    m.scale(Complex64::new(target / s, 0.0))
}
