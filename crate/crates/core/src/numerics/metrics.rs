use num_complex::Complex64;

use super::matrix::{dot_conj, norm2, ComplexMatrix};
use crate::error::{Error, Result};

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Largest singular value by power iteration on `A^H A`.
pub fn spectral_norm(a: &ComplexMatrix) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Dimension("spectral norm of an empty matrix".into()));
    }
    a.ensure_finite("spectral norm input")?;
    let n = a.cols();
    let mut v: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(1.0, GOLDEN_ANGLE * j as f64))
        .collect();
    let scale = norm2(&v);
    v.iter_mut().for_each(|z| *z /= scale);

    let ah = a.adjoint();
    let mut sigma_sq = 0.0;
    for _ in 0..20_000 {
        let w = ah.mul_vec(&a.mul_vec(&v));
        let next = dot_conj(&v, &w).re;
        let wn = norm2(&w);
        if wn == 0.0 {
            return Ok(0.0);
        }
        v = w.into_iter().map(|z| z / wn).collect();
        let done = (next - sigma_sq).abs() <= 1e-13 * next.abs();
        sigma_sq = next;
        if done {
            break;
        }
    }
    Ok(sigma_sq.max(0.0).sqrt())
}

/// `|<a, b>| / (||a|| ||b||)`.
pub fn cosine_similarity(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "cosine similarity of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (norm2(a), norm2(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidInput("cosine similarity of a zero vector".into()));
    }
    Ok((dot_conj(a, b).norm() / (na * nb)).min(1.0))
}

/// Mean squared difference after scaling each vector to unit maximum modulus.
/// An all-zero vector is left as is.
pub fn mse(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "mse of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("mse of empty vectors".into()));
    }
    let peak = |v: &[Complex64]| {
        let m = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if m > 0.0 {
            1.0 / m
        } else {
            1.0
        }
    };
    let (sa, sb) = (peak(a), peak(b));
    let total: f64 = a.iter().zip(b).map(|(x, y)| (x * sa - y * sb).norm_sqr()).sum();
    Ok(total / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spectral_norm_of_diagonals() {
        assert!((spectral_norm(&ComplexMatrix::identity(5)).unwrap() - 1.0).abs() < 1e-12);
        let d = ComplexMatrix::from_diag(&[c(0.3, 0.0), c(0.9, 0.0)]);
        assert!((spectral_norm(&d).unwrap() - 0.9).abs() < 1e-10);
        assert_eq!(spectral_norm(&ComplexMatrix::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn cosine_basic_cases() {
        let a = [c(1.0, 2.0), c(-0.5, 0.1)];
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let e1 = [c(1.0, 0.0), c(0.0, 0.0)];
        let e2 = [c(0.0, 0.0), c(1.0, 0.0)];
        assert_eq!(cosine_similarity(&e1, &e2).unwrap(), 0.0);
        assert!(cosine_similarity(&e1, &[c(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn mse_basic_cases() {
        let a = [c(1.0, 2.0), c(-0.5, 0.1)];
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let z = [c(0.0, 0.0); 2];
        assert!((mse(&[c(1.0, 0.0), c(0.0, 0.0)], &z).unwrap() - 0.5).abs() < 1e-15);
        assert!(mse(&[], &[]).is_err());
    }
}
