mod common;

use std::f64::consts::PI;

use common::random::{matrix, rng, with_spectral_norm};
use proptest::prelude::*;
use rand::Rng;
use wnrefl_core::bem::Medium;
use wnrefl_core::estimation::{
    default_lambda_fractions, diagonal_energy_ratio, directivity_map, estimate_cr_lasso, estimate_cr_lasso_with,
    estimate_cr_pinv, lasso_lambda_max, select_lambda, spectra_pair, LambdaRule, LassoSettings, PressureDataset,
    ReflectionMatrix, SpectraPair,
};
use wnrefl_core::geometry::make_receiver_grid;
use wnrefl_core::wavespace::{argmax_modulus, fibonacci_wavenumber_grid, synthesize_field, Direction, Spectrum};
use wnrefl_core::{Complex64, ComplexMatrix};

const K: f64 = 2.0 * PI * 3400.0 / 343.5;

fn synthetic(seed: u64, m: usize, q: usize, truth: &ComplexMatrix) -> SpectraPair {
    let mut r = rng(seed);
    let p_i = matrix(&mut r, m, q);
    let p_r = truth.matmul(&p_i);
    SpectraPair::new(p_i, p_r, fibonacci_wavenumber_grid(m, K).unwrap()).unwrap()
}

/// Sum over rows of `||A x - b||^2 + lambda ||x||_1` with `A = P_i^T`.
fn objective(sp: &SpectraPair, cr: &ComplexMatrix, lambda: f64) -> f64 {
    let resid = &cr.matmul(&sp.p_i) - &sp.p_r;
    resid.frobenius_norm().powi(2) + lambda * cr.data().iter().map(|z| z.norm()).sum::<f64>()
}

#[test]
fn pinv_recovers_a_random_matrix_with_twice_the_sources() {
    let mut r = rng(11);
    let truth = with_spectral_norm(&mut r, 100, 0.9);
    let sp = synthetic(12, 100, 200, &truth);
    let est = estimate_cr_pinv(&sp).unwrap();
    assert!(est.cr.relative_error(&truth) <= 1e-6);
}

#[test]
fn lasso_with_vanishing_penalty_matches_the_truth() {
    let mut r = rng(13);
    let truth = with_spectral_norm(&mut r, 40, 0.9);
    let sp = synthetic(14, 40, 80, &truth);
    let lam = 1e-10 * lasso_lambda_max(&sp).unwrap();
    let est = estimate_cr_lasso(&sp, lam).unwrap();
    assert!(est.cr.relative_error(&truth) <= 1e-3);
}

#[test]
fn identical_spectra_give_an_exact_fit() {
    let mut r = rng(15);
    let p = matrix(&mut r, 60, 120);
    let sp = SpectraPair::new(p.clone(), p.clone(), fibonacci_wavenumber_grid(60, K).unwrap()).unwrap();
    let est = estimate_cr_pinv(&sp).unwrap();
    assert!(est.cr.matmul(&p).relative_error(&p) <= 1e-8);
}

#[test]
fn underdetermined_pinv_still_fits_the_data() {
    let mut r = rng(16);
    let truth = with_spectral_norm(&mut r, 80, 0.7);
    let sp = synthetic(17, 80, 30, &truth);
    let est = estimate_cr_pinv(&sp).unwrap();
    assert!(est.cr.matmul(&sp.p_i).relative_error(&sp.p_r) <= 1e-8);
}

#[test]
fn lasso_finds_a_specular_diagonal_from_few_sources() {
    let m = 100;
    let mut r = rng(18);
    let diag: Vec<Complex64> = (0..m)
        .map(|_| Complex64::from_polar(r.random_range(0.5..0.9), r.random_range(-PI..PI)))
        .collect();
    let truth = ComplexMatrix::from_diag(&diag);
    let sp = synthetic(19, m, m / 2, &truth);
    let lam = 0.01 * lasso_lambda_max(&sp).unwrap();
    let est = estimate_cr_lasso(&sp, lam).unwrap();
    assert!(diagonal_energy_ratio(&est.cr, 0) >= 0.95);

    // the minimum-norm solution projects each row onto a half-rank space
    let pinv = estimate_cr_pinv(&sp).unwrap();
    assert!(diagonal_energy_ratio(&pinv.cr, 0) < 0.8);
}

#[test]
fn lasso_objective_never_exceeds_the_pinv_objective() {
    let mut r = rng(20);
    let truth = with_spectral_norm(&mut r, 50, 0.8);
    let sp = synthetic(21, 50, 35, &truth);
    let lmax = lasso_lambda_max(&sp).unwrap();
    let pinv = estimate_cr_pinv(&sp).unwrap();
    for frac in [0.3, 0.05, 0.001] {
        let lam = frac * lmax;
        let est = estimate_cr_lasso_with(&sp, lam, LassoSettings::default()).unwrap();
        let ours = objective(&sp, &est.matrix.cr, lam);
        assert!(ours <= objective(&sp, &pinv.cr, lam) * (1.0 + 1e-9));
        let reported: f64 = est.objectives.iter().sum();
        assert!((reported - ours).abs() <= 1e-8 * ours.max(1.0));
    }
    let zero = estimate_cr_lasso(&sp, lmax * 1.0001).unwrap();
    assert_eq!(zero.cr.max_abs(), 0.0);
}

#[test]
fn lambda_selection_returns_a_candidate_and_refits() {
    let m = 60;
    let mut r = rng(22);
    let diag: Vec<Complex64> = (0..m).map(|_| Complex64::from_polar(0.8, r.random_range(-PI..PI))).collect();
    let truth = ComplexMatrix::from_diag(&diag);
    let mut sp = synthetic(23, m, 40, &truth);
    // small measurement noise so the held-out residual has a floor
    let noise = matrix(&mut r, m, 40).scale(Complex64::new(1e-3, 0.0));
    sp.p_r = &sp.p_r + &noise;
    let fractions = default_lambda_fractions(10, 1e-4, 1e-1);
    let settings = LassoSettings::default();
    let min = select_lambda(&sp, &fractions, LambdaRule::MinResidual, settings).unwrap();
    let one_se = select_lambda(&sp, &fractions, LambdaRule::OneStandardError, settings).unwrap();
    assert_eq!(min.scores.len(), 10);
    assert!(min.scores.windows(2).all(|w| w[0].lambda > w[1].lambda));
    assert!(min.scores.iter().any(|s| s.lambda == min.best_lambda));
    let best = min.scores.iter().map(|s| s.mean).fold(f64::INFINITY, f64::min);
    let chosen = min.scores.iter().find(|s| s.lambda == min.best_lambda).unwrap();
    assert_eq!(chosen.mean, best);
    assert!(one_se.best_lambda >= min.best_lambda);
    assert_eq!(one_se.estimate.lambda, one_se.best_lambda);
    assert!(diagonal_energy_ratio(&one_se.estimate.matrix.cr, 0) >= 0.9);

    let few = SpectraPair::new(sp.p_i.clone(), sp.p_r.clone(), sp.grid.clone()).unwrap();
    let few = SpectraPair::new(
        ComplexMatrix::from_fn(m, 4, |i, j| few.p_i[(i, j)]),
        ComplexMatrix::from_fn(m, 4, |i, j| few.p_r[(i, j)]),
        few.grid,
    )
    .unwrap();
    assert!(select_lambda(&few, &fractions, LambdaRule::OneStandardError, settings).is_err());
    assert!(select_lambda(&sp, &[], LambdaRule::OneStandardError, settings).is_err());
}

#[test]
fn estimates_are_deterministic() {
    let mut r = rng(24);
    let truth = with_spectral_norm(&mut r, 40, 0.8);
    let sp = synthetic(25, 40, 30, &truth);
    let lam = 0.01 * lasso_lambda_max(&sp).unwrap();
    let a = estimate_cr_lasso(&sp, lam).unwrap();
    let b = estimate_cr_lasso(&sp, lam).unwrap();
    assert_eq!(a.cr, b.cr);
    assert_eq!(estimate_cr_pinv(&sp).unwrap().cr, estimate_cr_pinv(&sp).unwrap().cr);
}

#[test]
fn plane_wave_dataset_puts_energy_at_the_specular_mode() {
    let medium = Medium::new(343.5, 1.205, 3400.0).unwrap();
    let grid = fibonacci_wavenumber_grid(100, medium.k()).unwrap();
    let rec = make_receiver_grid(20, 20, 0.04, 0.01).unwrap();
    let modes = [0usize, 7, 33, 64, 90];
    let mut inc = ComplexMatrix::zeros(rec.len(), modes.len());
    let mut refl = ComplexMatrix::zeros(rec.len(), modes.len());
    for (q, &n) in modes.iter().enumerate() {
        let fi = synthesize_field(&Spectrum::one_hot(100, n, Direction::Incident), &grid, &rec.positions).unwrap();
        let fr = synthesize_field(&Spectrum::one_hot(100, n, Direction::Reflected), &grid, &rec.positions).unwrap();
        inc.set_column(q, &fi);
        refl.set_column(q, &fr.iter().map(|z| z * 0.7).collect::<Vec<_>>());
    }
    let ds = PressureDataset::from_parts(inc, refl, rec, medium).unwrap();
    let sp = spectra_pair(&ds, &grid).unwrap();
    for (q, &n) in modes.iter().enumerate() {
        assert_eq!(argmax_modulus(&sp.p_i.column(q)), n);
        assert_eq!(argmax_modulus(&sp.p_r.column(q)), n);
        let ratio = sp.p_r[(n, q)] / sp.p_i[(n, q)];
        assert!((ratio - 0.7).norm() < 1e-6, "mode {n}: {ratio}");
    }
    let other = fibonacci_wavenumber_grid(100, medium.k() * 1.01).unwrap();
    assert!(spectra_pair(&ds, &other).is_err());
}

#[test]
fn identity_matrix_has_specular_directivity() {
    let grid = fibonacci_wavenumber_grid(100, K).unwrap();
    let fine = fibonacci_wavenumber_grid(900, K).unwrap();
    let cr = ReflectionMatrix::identity(&grid);
    for deg in [0.0f64, 30.0, 60.0] {
        let n = grid.mode_for_angle(deg.to_radians()).unwrap();
        let map = directivity_map(&cr, n, &fine, 0.8).unwrap();
        assert_eq!(map.specular_mode, n);
        assert_eq!(map.peak_coarse, n);
        assert_eq!(map.off_specular_fraction(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn diagonal_ratio_is_a_fraction(seed in any::<u64>(), n in 1usize..30, band in 0usize..5) {
        let mut r = rng(seed);
        let m = matrix(&mut r, n, n);
        let d = diagonal_energy_ratio(&m, band);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!(diagonal_energy_ratio(&m, band + 1) >= d - 1e-12);
        prop_assert!((diagonal_energy_ratio(&m, n) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pinv_is_linear_in_the_reflected_spectra(seed in any::<u64>(), s in 0.1f64..3.0) {
        let mut r = rng(seed);
        let truth = with_spectral_norm(&mut r, 20, 0.5);
        let sp = synthetic(seed ^ 1, 20, 40, &truth);
        let scaled = SpectraPair::new(sp.p_i.clone(), sp.p_r.scale(Complex64::new(s, 0.0)), sp.grid.clone()).unwrap();
        let a = estimate_cr_pinv(&sp).unwrap().cr.scale(Complex64::new(s, 0.0));
        let b = estimate_cr_pinv(&scaled).unwrap().cr;
        prop_assert!(b.relative_error(&a) < 1e-10);
    }
}
