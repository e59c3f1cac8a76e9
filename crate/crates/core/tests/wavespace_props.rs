mod common;

use std::f64::consts::PI;

use common::random::rng;
use proptest::prelude::*;
use rand::Rng;
use wnrefl_core::geometry::make_receiver_grid;
use wnrefl_core::wavespace::{
    argmax_modulus, fibonacci_wavenumber_grid, spectrum_from_plane, steering_matrix, synthesize_field, Direction,
    Spectrum,
};
use wnrefl_core::Complex64;

fn k_at(f: f64) -> f64 {
    2.0 * PI * f / 343.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weight_sum_approaches_disk_area(m in 100usize..3000, k in 1.0f64..200.0) {
        let g = fibonacci_wavenumber_grid(m, k).unwrap();
        let area = PI * k * k;
        prop_assert!((g.weight_sum() - area).abs() <= 0.01 * area);
        prop_assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn modes_lie_on_the_propagating_sphere(m in 1usize..500, k in 0.5f64..100.0) {
        let g = fibonacci_wavenumber_grid(m, k).unwrap();
        for mode in &g.modes {
            let r2 = mode.kx * mode.kx + mode.ky * mode.ky + mode.kz * mode.kz;
            prop_assert!((r2 - k * k).abs() <= 1e-10 * k * k);
            prop_assert!(mode.kz >= k / (2.0 * m as f64));
        }
    }

    #[test]
    fn steering_entries_have_unit_modulus_over_2pi(seed in any::<u64>(), m in 1usize..60) {
        let mut r = rng(seed);
        let pts: Vec<[f64; 3]> = (0..8).map(|_| [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(0.0..1.0)]).collect();
        let g = fibonacci_wavenumber_grid(m, 20.0).unwrap();
        for dir in [Direction::Incident, Direction::Reflected] {
            let s = steering_matrix(&pts, &g, dir).unwrap();
            prop_assert!(s.data().iter().all(|z| (z.norm() - 1.0 / (2.0 * PI)).abs() < 1e-15));
        }
    }
}

#[test]
fn one_hot_synthesis_is_a_plane_wave() {
    let k = k_at(3400.0);
    let g = fibonacci_wavenumber_grid(100, k).unwrap();
    let mut r = rng(3);
    let pts: Vec<[f64; 3]> = (0..10)
        .map(|_| [r.random_range(-0.5..0.5), r.random_range(-0.5..0.5), r.random_range(0.0..0.5)])
        .collect();
    for n in [0, 17, 99] {
        let field = synthesize_field(&Spectrum::one_hot(100, n, Direction::Reflected), &g, &pts).unwrap();
        let m = &g.modes[n];
        for (p, v) in pts.iter().zip(&field) {
            let phase = m.kx * p[0] + m.ky * p[1] + m.kz * p[2];
            let want = Complex64::new(phase.cos(), phase.sin()) * m.weight / (2.0 * PI);
            assert!((v - want).norm() <= 1e-12 * want.norm());
        }
    }
}

#[test]
fn analysis_recovers_the_synthesized_mode() {
    let rec = make_receiver_grid(20, 20, 0.04, 0.01).unwrap();
    for f in [1700.0, 3400.0] {
        let g = fibonacci_wavenumber_grid(100, k_at(f)).unwrap();
        for dir in [Direction::Incident, Direction::Reflected] {
            for n in 0..g.len() {
                let field = synthesize_field(&Spectrum::one_hot(100, n, dir), &g, &rec.positions).unwrap();
                let s = spectrum_from_plane(&field, &rec, &g, dir).unwrap();
                assert_eq!(argmax_modulus(&s.values), n, "f {f}, {dir:?}, mode {n}");
            }
        }
    }
}

#[test]
fn apex_entry_matches_dense_aperture_quadrature() {
    let k = k_at(3400.0);
    let g = fibonacci_wavenumber_grid(100, k).unwrap();
    let rec = make_receiver_grid(20, 20, 0.04, 0.01).unwrap();
    let mut spec = Spectrum::one_hot(100, 0, Direction::Reflected);
    spec.values[0] = Complex64::new(1.0 / g.modes[0].weight, 0.0);
    let field = synthesize_field(&spec, &g, &rec.positions).unwrap();
    let ours = spectrum_from_plane(&field, &rec, &g, Direction::Reflected).unwrap().values[0];

    // (1/2pi) integral of the unit plane wave over the 0.8 m aperture, by a
    // 400 x 400 midpoint rule, then referred back to z = 0
    let (half, n) = (0.4, 400);
    let h = 2.0 * half / n as f64;
    let m = &g.modes[0];
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (-half + (i as f64 + 0.5) * h, -half + (j as f64 + 0.5) * h);
            let p = Complex64::from_polar(1.0 / (2.0 * PI), m.kx * x + m.ky * y + m.kz * 0.01);
            acc += p * Complex64::from_polar(h * h / (2.0 * PI), -(m.kx * x + m.ky * y));
        }
    }
    let exact = acc * Complex64::from_polar(1.0, -m.kz * 0.01);
    assert!((ours.norm() - exact.norm()).abs() <= 0.2 * exact.norm());
}

#[test]
fn back_propagation_is_height_consistent() {
    let k = k_at(3400.0);
    let g = fibonacci_wavenumber_grid(100, k).unwrap();
    for dir in [Direction::Incident, Direction::Reflected] {
        for n in [0, 30, 80] {
            let spec = Spectrum::one_hot(100, n, dir);
            let at = |h: f64| {
                let rec = make_receiver_grid(20, 20, 0.04, h).unwrap();
                let field = synthesize_field(&spec, &g, &rec.positions).unwrap();
                spectrum_from_plane(&field, &rec, &g, dir).unwrap().values[n]
            };
            let (a, b) = (at(0.01), at(0.07));
            assert!((a - b).norm() <= 0.05 * a.norm(), "{dir:?} mode {n}");
        }
    }
}
