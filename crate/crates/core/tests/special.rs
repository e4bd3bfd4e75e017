use fracdelay::linalg::expm;
use fracdelay::model::FractionalDelaySystem;
use fracdelay::special::{
    fit_decay_envelope, gamma_fn, ml_matrix, ml_real, ml_scalar, phi_alpha, phi_alpha_j,
    phi_alpha_l1, verify_kernel_bounds, MatrixMittagLeffler, MlEvalConfig,
};
use fracdelay::Error;
use nalgebra::{dmatrix, DMatrix};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn cfg() -> MlEvalConfig {
    MlEvalConfig::default()
}

fn scalar_sys(alpha: f64, a0: f64) -> FractionalDelaySystem {
    FractionalDelaySystem::constant(alpha, vec![0.0], vec![dmatrix![a0]])
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

#[test]
fn gamma_values() {
    assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
    assert!(close(gamma_fn(0.5).unwrap(), PI.sqrt(), 1e-14));
    assert!(close(gamma_fn(5.0).unwrap(), 24.0, 1e-14));
    // Γ(-0.5) = -2√π
    assert!(close(gamma_fn(-0.5).unwrap(), -2.0 * PI.sqrt(), 1e-13));
    assert_eq!(
        gamma_fn(-2.0).unwrap_err(),
        Error::PoleAtNonpositiveInteger(-2.0)
    );
    assert!(matches!(
        gamma_fn(200.0),
        Err(Error::OverflowBeyondRepresentableRange(_))
    ));
}

#[test]
fn gamma_recurrence() {
    for i in 1..200 {
        let x = 0.1 + 0.77 * i as f64 / 1.3;
        if x + 1.0 > 170.0 {
            break;
        }
        let lhs = gamma_fn(x + 1.0).unwrap();
        assert!(close(lhs, x * gamma_fn(x).unwrap(), 1e-13), "x = {x}");
    }
}

#[test]
fn closed_form_mittag_leffler_cases() {
    let c = cfg();
    // E_{1/2}(-x) = e^{x²} erfc(x)
    for &x in &[0.1f64, 1.0, 2.5, 6.0] {
        let want = (x * x).exp() * libm::erfc(x);
        assert!(
            close(ml_real(0.5, 1.0, -x, &c).unwrap(), want, 1e-11),
            "x = {x}"
        );
    }
    assert!(close(ml_real(0.5, 1.0, -1.0, &c).unwrap(), 0.4275836, 1e-7));
    // E_{2,1}(-x²) = cos x, E_{2,2}(-x²) = sin x / x
    for &x in &[0.3f64, 2.0, 7.5] {
        assert!((ml_real(2.0, 1.0, -x * x, &c).unwrap() - x.cos()).abs() < 1e-11);
        assert!((ml_real(2.0, 2.0, -x * x, &c).unwrap() - x.sin() / x).abs() < 1e-11);
    }
    // E_{1,2}(z) = (e^z - 1)/z
    for &z in &[-20.0, -0.5, 3.0] {
        let want: f64 = (f64::exp(z) - 1.0) / z;
        assert!(close(ml_real(1.0, 2.0, z, &c).unwrap(), want, 1e-12));
    }
    let z = Complex64::new(-1.0, 2.0);
    let e = ml_scalar(1.0, 1.0, z, &c).unwrap();
    assert!((e - z.exp()).norm() < 1e-12 * z.exp().norm());
}

#[test]
fn matrix_cases() {
    let c = cfg();
    let id = ml_matrix(0.7, 1.0, &DMatrix::zeros(3, 3), 1.3, &c).unwrap();
    assert!((id - DMatrix::<f64>::identity(3, 3)).amax() < 1e-15);
    let e = ml_matrix(1.0, 1.0, &dmatrix![-1.0, 0.0; 0.0, -2.0], 1.0, &c).unwrap();
    assert!((e[(0, 0)] - (-1f64).exp()).abs() < 1e-14);
    assert!((e[(1, 1)] - (-2f64).exp()).abs() < 1e-14);
    assert_eq!(e[(0, 1)], 0.0);
    let h = ml_matrix(0.5, 1.0, &dmatrix![-1.0], 1.0, &c).unwrap();
    assert!((h[(0, 0)] - 0.4275836).abs() < 1e-7);
}

#[test]
fn fundamental_matrix_cases() {
    let c = cfg();
    let s = scalar_sys(1.0, -1.0);
    assert_eq!(phi_alpha_j(&s, 0, 0.0, &c).unwrap()[(0, 0)], 1.0);
    assert!((phi_alpha_j(&s, 0, 2.0, &c).unwrap()[(0, 0)] - (-2f64).exp()).abs() < 1e-14);
    assert!((phi_alpha(&s, 1.0, &c).unwrap()[(0, 0)] - (-1f64).exp()).abs() < 1e-14);
    assert_eq!(phi_alpha(&s, -1.0, &c).unwrap()[(0, 0)], 0.0);
    let two = FractionalDelaySystem::constant(1.5, vec![0.0], vec![dmatrix![-1.0]]);
    assert_eq!(phi_alpha_j(&two, 1, 0.0, &c).unwrap()[(0, 0)], 0.0);

    let free = scalar_sys(0.5, 0.0);
    let p = phi_alpha(&free, 4.0, &c).unwrap()[(0, 0)];
    assert!((p - 0.5 / PI.sqrt()).abs() < 1e-14);
    assert_eq!(
        phi_alpha(&free, 0.0, &c).unwrap_err(),
        Error::SingularAtZero
    );
}

#[test]
fn kernel_l1_cases() {
    let c = cfg();
    let s = scalar_sys(1.0, -1.0);
    for &d in &[1e-3, 0.5, 1.0, 4.0] {
        let v = phi_alpha_l1(&s, d, &c).unwrap();
        assert!((v - (1.0 - f64::exp(-d))).abs() < 1e-9, "delta = {d}");
    }
    let free = scalar_sys(0.5, 0.0);
    let v = phi_alpha_l1(&free, 1.0, &c).unwrap();
    assert!((v - 2.0 / PI.sqrt()).abs() < 1e-8);
    // non-normal generator forces the quadrature path
    let nn = FractionalDelaySystem::constant(1.0, vec![0.0], vec![dmatrix![-1.0, 3.0; 0.0, -1.0]]);
    let oracle = {
        // trapezoid on a fine grid of ‖e^{As}‖₂
        let m = 20_000;
        let h = 2.0 / m as f64;
        let f = |s: f64| fracdelay::linalg::norm2(&expm(&(nn.a0() * s)));
        (0..m)
            .map(|i| 0.5 * h * (f(i as f64 * h) + f((i + 1) as f64 * h)))
            .sum::<f64>()
    };
    let v = phi_alpha_l1(&nn, 2.0, &c).unwrap();
    assert!((v - oracle).abs() < 1e-7 * oracle, "{v} vs {oracle}");
}

#[test]
fn decay_envelopes() {
    let e = fit_decay_envelope(&dmatrix![-1.0, 0.0; 0.0, -2.0]).unwrap();
    assert!((e.lambda - 0.9).abs() < 1e-12);
    assert!((e.k - 1.0).abs() < 1e-9);
    assert!(matches!(
        fit_decay_envelope(&dmatrix![0.0]),
        Err(Error::NotAStabilityMatrix(_))
    ));
    let nn = dmatrix![-1.0, 10.0; 0.0, -1.0];
    let e = fit_decay_envelope(&nn).unwrap();
    assert!(e.k > 1.0);
    for i in 0..400 {
        let t = i as f64 * 0.05;
        let lhs = fracdelay::linalg::norm2(&expm(&(&nn * t)));
        assert!(lhs <= e.bound(t) * (1.0 + 1e-9));
    }
}

#[test]
fn unit_order_bound_holds_with_equality() {
    let rep = verify_kernel_bounds(&scalar_sys(1.0, -1.0), &[0.5, 1.0, 2.0, 5.0], &cfg()).unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn three_halves_order_exponential_bounds_fail() {
    // reference values from a 50-digit series evaluation
    let oracle = [
        (0.5, 0.754048803869357),
        (1.0, 0.396629365318088),
        (2.0, -0.149363895024064),
    ];
    let c = cfg();
    for (t, e) in oracle {
        let v = ml_real(1.5, 1.0, -f64::powf(t, 1.5), &c).unwrap();
        assert!((v - e).abs() < 1e-12, "t = {t}");
    }
    // |E_{1.5,1}(-t^1.5)| exceeds e^{-t^1.5} at every one of these points
    let rep = verify_kernel_bounds(&scalar_sys(1.5, -1.0), &[0.5, 1.0, 2.0], &c).unwrap();
    let e1 = rep.checks.iter().find(|c| c.name == "ii.E[1]").unwrap();
    assert_eq!(e1.failures, 3);
    assert!(!rep.passed);
}

fn diagonalizable(n: usize, seed: &[f64]) -> DMatrix<f64> {
    // V diag(λ) V⁻¹ with a well-conditioned V
    let v = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            0.3 * seed[(i * n + j) % seed.len()]
        }
    });
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -0.5 - seed[i % seed.len()].abs() * 2.0
        } else {
            0.0
        }
    });
    &v * d * v.try_inverse().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectral_and_series_paths_agree(
        seed in prop::collection::vec(-1.0..1.0f64, 9),
        alpha in 0.3..2.0f64,
        beta in 0.5..2.5f64,
        t in 0.1..1.5f64,
    ) {
        let a = diagonalizable(3, &seed);
        let c = cfg();
        let ml = MatrixMittagLeffler::new(alpha, &a, &c).unwrap();
        prop_assume!(ml.is_spectral());
        let s = ml.eval(beta, t, &c).unwrap();
        let r = ml.eval_series_path(beta, t, &c).unwrap();
        prop_assert!((&s - &r).amax() <= 1e-9 * s.amax().max(1.0));
    }

    #[test]
    fn unit_order_is_the_exponential(x in -5.0..5.0f64) {
        let v = ml_real(1.0, 1.0, x, &cfg()).unwrap();
        prop_assert!((v - x.exp()).abs() <= 1e-10 * x.exp());
    }
}
