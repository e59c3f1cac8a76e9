//! Partial-wave series for a point source next to a rigid sphere.
//!
//! Independent of the BEM code: spherical Bessel functions are computed here
//! by Miller's downward recurrence (j_n) and upward recurrence (y_n).

use std::f64::consts::PI;

use num_complex::Complex64;

/// `j_0..=j_nmax` at `x > 0`.
pub fn sph_jn(nmax: usize, x: f64) -> Vec<f64> {
    let start = nmax + 20 + x.ceil() as usize * 2;
    let mut vals = vec![0.0; start + 2];
    vals[start + 1] = 0.0;
    vals[start] = 1e-300;
    for n in (1..=start).rev() {
        vals[n - 1] = (2 * n + 1) as f64 / x * vals[n] - vals[n + 1];
        if vals[n - 1].abs() > 1e250 {
            for v in vals.iter_mut().skip(n - 1) {
                *v *= 1e-250;
            }
        }
    }
    let scale = (x.sin() / x) / vals[0];
    // Near zeros of sin x use j_1 for the normalization instead.
    let scale = if (x.sin() / x).abs() < 1e-3 {
        let j1 = x.sin() / (x * x) - x.cos() / x;
        j1 / vals[1]
    } else {
        scale
    };
    vals.truncate(nmax + 1);
    vals.iter().map(|v| v * scale).collect()
}

/// `y_0..=y_nmax` at `x > 0`.
pub fn sph_yn(nmax: usize, x: f64) -> Vec<f64> {
    let mut y = vec![0.0; nmax + 1];
    y[0] = -x.cos() / x;
    if nmax >= 1 {
        y[1] = -x.cos() / (x * x) - x.sin() / x;
    }
    for n in 1..nmax {
        y[n + 1] = (2 * n + 1) as f64 / x * y[n] - y[n - 1];
    }
    y
}

/// Spherical Hankel functions of the first kind, `h_n = j_n + i y_n`.
pub fn sph_hn(nmax: usize, x: f64) -> Vec<Complex64> {
    sph_jn(nmax, x)
        .into_iter()
        .zip(sph_yn(nmax, x))
        .map(|(j, y)| Complex64::new(j, y))
        .collect()
}

/// `f_n'` from `f_{n-1}` and `f_n`: `f_n' = f_{n-1} - (n+1)/x f_n`, with
/// `f_0' = -f_1`.
fn derivs<T>(f: &[T], x: f64) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Neg<Output = T>,
{
    (0..f.len() - 1)
        .map(|n| {
            if n == 0 {
                -f[1]
            } else {
                f[n - 1] - f[n] * ((n + 1) as f64 / x)
            }
        })
        .collect()
}

fn legendre(nmax: usize, t: f64) -> Vec<f64> {
    let mut p = vec![1.0; nmax + 1];
    if nmax >= 1 {
        p[1] = t;
    }
    for n in 1..nmax {
        p[n + 1] = ((2 * n + 1) as f64 * t * p[n] - n as f64 * p[n - 1]) / (n + 1) as f64;
    }
    p
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn geometry(rs: [f64; 3], r: [f64; 3]) -> (f64, f64, f64) {
    let (rr, rsr) = (norm3(r), norm3(rs));
    let cosg = ((r[0] * rs[0] + r[1] * rs[1] + r[2] * rs[2]) / (rr * rsr)).clamp(-1.0, 1.0);
    (rr, rsr, cosg)
}

/// Partial-wave expansion of `e^{ikR}/(4 pi R)` for `|r| < |rs|`, or of the
/// field scattered by a rigid sphere of radius `a` when `a` is given.
fn series(k: f64, rs: [f64; 3], r: [f64; 3], sphere: Option<f64>) -> Complex64 {
    let (rr, rsr, cosg) = geometry(rs, r);
    assert!(rsr > rr);
    let nmax = (k * rsr) as usize + 40;
    let hs = sph_hn(nmax, k * rsr);
    let p = legendre(nmax, cosg);
    let radial: Vec<Complex64> = match sphere {
        None => sph_jn(nmax, k * rr).into_iter().map(|j| Complex64::new(j, 0.0)).collect(),
        Some(a) => {
            let ja = sph_jn(nmax + 1, k * a);
            let ha = sph_hn(nmax + 1, k * a);
            let (dja, dha) = (derivs(&ja, k * a), derivs(&ha, k * a));
            let hr = sph_hn(nmax, k * rr);
            (0..=nmax).map(|n| -(dja[n] / dha[n]) * hr[n]).collect()
        }
    };
    let mut total = Complex64::new(0.0, 0.0);
    for n in 0..=nmax {
        let term = radial[n] * hs[n] * ((2 * n + 1) as f64 * p[n]);
        total += term;
        if n > 10 && term.norm() < 1e-17 * total.norm() {
            break;
        }
    }
    Complex64::new(0.0, k / (4.0 * PI)) * total
}

/// Free-field point source by its partial-wave expansion.
pub fn free_field_series(k: f64, rs: [f64; 3], r: [f64; 3]) -> Complex64 {
    series(k, rs, r, None)
}

/// Total pressure at `r` (|r| >= a) for a unit point source `e^{ikR}/(4 pi R)`
/// at `rs` (|rs| > |r|) outside a rigid sphere of radius `a` at the origin.
pub fn rigid_sphere_point_source(a: f64, k: f64, rs: [f64; 3], r: [f64; 3]) -> Complex64 {
    assert!(norm3(r) >= a * (1.0 - 1e-9));
    series(k, rs, r, None) + series(k, rs, r, Some(a))
}

/// Relative L2 error `||a - b|| / ||b||`.
pub fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}
