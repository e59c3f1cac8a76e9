mod common;

use common::random::{matrix, rng, vector};
use proptest::prelude::*;
use wnrefl_core::numerics::{
    complex_lasso, cosine_similarity, hermitian_inv_sqrt, mse, norm2, pinv, singular_values, solve, spectral_norm,
    DEFAULT_PINV_RTOL,
};
use wnrefl_core::{Complex64, ComplexMatrix};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn lasso_objective(a: &ComplexMatrix, b: &[Complex64], x: &[Complex64], lambda: f64) -> f64 {
    let r: Vec<Complex64> = a.mul_vec(x).iter().zip(b).map(|(p, q)| p - q).collect();
    norm2(&r).powi(2) + lambda * x.iter().map(|z| z.norm()).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pinv_penrose_conditions(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9) {
        let a = matrix(&mut rng(seed), rows, cols);
        let p = pinv(&a, DEFAULT_PINV_RTOL).unwrap();
        let scale = a.frobenius_norm().max(1.0);
        prop_assert!(a.matmul(&p).matmul(&a).max_abs_diff(&a) < 1e-10 * scale);
        prop_assert!(p.matmul(&a).matmul(&p).max_abs_diff(&p) < 1e-10 * p.frobenius_norm().max(1.0));
        let ap = a.matmul(&p);
        prop_assert!(ap.hermitian_defect() < 1e-10);
        if rows <= cols {
            prop_assert!(ap.max_abs_diff(&ComplexMatrix::identity(rows)) < 1e-9);
        }
    }

    #[test]
    fn spectral_norm_agrees_with_svd(seed in any::<u64>(), n in 1usize..12, m in 1usize..12) {
        let a = matrix(&mut rng(seed), n, m);
        let s = spectral_norm(&a).unwrap();
        let smax = singular_values(&a).unwrap().into_iter().fold(0.0, f64::max);
        prop_assert!((s - smax).abs() <= 1e-6 * smax);
    }

    #[test]
    fn spectral_norm_is_absolutely_homogeneous(seed in any::<u64>(), re in -5.0f64..5.0, im in -5.0f64..5.0) {
        let a = matrix(&mut rng(seed), 6, 4);
        let z = c(re, im);
        let lhs = spectral_norm(&a.scale(z)).unwrap();
        let rhs = z.norm() * spectral_norm(&a).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.max(1e-12));
    }

    #[test]
    fn cosine_is_scale_and_phase_invariant(seed in any::<u64>(), n in 1usize..40, s in 0.01f64..100.0, phase in 0.0f64..6.3) {
        let mut r = rng(seed);
        let (a, b) = (vector(&mut r, n), vector(&mut r, n));
        let base = cosine_similarity(&a, &b).unwrap();
        let z = Complex64::from_polar(s, phase);
        let scaled: Vec<Complex64> = b.iter().map(|v| v * z).collect();
        prop_assert!((cosine_similarity(&a, &scaled).unwrap() - base).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&base));
        prop_assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mse_is_symmetric_and_scale_free(seed in any::<u64>(), n in 1usize..40, s in 0.01f64..100.0) {
        let mut r = rng(seed);
        let (a, b) = (vector(&mut r, n), vector(&mut r, n));
        let m = mse(&a, &b).unwrap();
        prop_assert!((m - mse(&b, &a).unwrap()).abs() < 1e-14);
        let scaled: Vec<Complex64> = b.iter().map(|v| v * s).collect();
        prop_assert!((mse(&a, &scaled).unwrap() - m).abs() < 1e-12);
        prop_assert!(mse(&a, &a).unwrap() == 0.0);
    }

    #[test]
    fn inv_sqrt_whitens_gram(seed in any::<u64>(), n in 1usize..10) {
        let a = matrix(&mut rng(seed), n + 3, n);
        let h = a.adjoint().matmul(&a);
        let m = hermitian_inv_sqrt(&h, None).unwrap();
        prop_assert!(m.hermitian_defect() < 1e-10);
        prop_assert!(m.matmul(&h).matmul(&m).max_abs_diff(&ComplexMatrix::identity(n)) < 1e-9);
    }

    // Coordinate descent must end no worse than the least-squares point
    // under the same penalized objective.
    #[test]
    fn lasso_beats_least_squares_objective(seed in any::<u64>(), lambda in 0.0f64..5.0) {
        let mut r = rng(seed);
        let a = matrix(&mut r, 12, 5);
        let b = vector(&mut r, 12);
        let x_ls = pinv(&a, DEFAULT_PINV_RTOL).unwrap().mul_vec(&b);
        let res = complex_lasso(&a, &b, lambda, 20_000, 1e-12).unwrap();
        prop_assert!(res.converged);
        let ours = lasso_objective(&a, &b, &res.x, lambda);
        prop_assert!((res.objective - ours).abs() <= 1e-9 * ours.max(1.0));
        prop_assert!(ours <= lasso_objective(&a, &b, &x_ls, lambda) + 1e-9);
    }

    #[test]
    fn lasso_support_shrinks_with_lambda(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = matrix(&mut r, 15, 8);
        let b = vector(&mut r, 15);
        let lmax = 2.0 * a.adjoint().mul_vec(&b).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let at_max = complex_lasso(&a, &b, lmax * 1.0001, 1000, 1e-12).unwrap();
        prop_assert!(at_max.x.iter().all(|z| *z == c(0.0, 0.0)));
        let nnz = |l: f64| complex_lasso(&a, &b, l, 20_000, 1e-12).unwrap().x.iter().filter(|z| z.norm() > 0.0).count();
        prop_assert!(nnz(0.5 * lmax) <= nnz(0.05 * lmax));
    }
}

#[test]
fn lasso_zero_penalty_matches_direct_solve() {
    let mut r = rng(7);
    let a = matrix(&mut r, 6, 6).scale(c(0.2, 0.0));
    let a = &a + &ComplexMatrix::identity(6);
    let b = vector(&mut r, 6);
    let x = solve(&a, &b).unwrap();
    let res = complex_lasso(&a, &b, 0.0, 50_000, 1e-14).unwrap();
    let err: f64 = res.x.iter().zip(&x).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn lasso_identity_soft_threshold_example() {
    let a = ComplexMatrix::identity(2);
    let b = [c(3.0, 4.0), c(0.1, 0.0)];
    let res = complex_lasso(&a, &b, 1.0, 100, 1e-14).unwrap();
    assert!((res.x[0] - c(2.7, 3.6)).norm() < 1e-12);
    assert_eq!(res.x[1], c(0.0, 0.0));
    // independent oracle: brute-force minimization of the first coordinate
    // along its phase ray, |x - b|^2 + |x| with x = t b/|b|
    let (mut best_t, mut best) = (0.0, f64::INFINITY);
    for i in 0..=500_000 {
        let t = i as f64 * 1e-5;
        let f = (t - 5.0f64).powi(2) + t;
        if f < best {
            best = f;
            best_t = t;
        }
    }
    assert!((res.x[0].norm() - best_t).abs() < 2e-5);
}

#[test]
fn lasso_recovers_sparse_support() {
    let mut r = rng(11);
    let m = 10;
    let a = matrix(&mut r, 4 * m, m);
    let mut truth = vec![c(0.0, 0.0); m];
    truth[1] = c(1.5, -0.5);
    truth[4] = c(-1.0, 2.0);
    truth[8] = c(0.0, 1.2);
    let b = a.mul_vec(&truth);
    let res = complex_lasso(&a, &b, 0.5, 20_000, 1e-12).unwrap();
    let support: Vec<usize> = (0..m).filter(|&j| res.x[j].norm() > 1e-8).collect();
    assert_eq!(support, vec![1, 4, 8]);
}
