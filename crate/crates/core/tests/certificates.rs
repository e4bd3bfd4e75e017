use fracdelay::certificates::{
    cert_g_f, cert_g_h, cert_g_hat_f, cert_g_hat_h, certify, default_delta_grid,
    delay_free_certify, gain_bound_l2, gain_bound_uniform, high_order_check, DelayFreeVerdict,
    Family, HighOrderVerdict, Verdict,
};
use fracdelay::model::{
    validate_system, ControlInput, FractionalDelaySystem, Gain, InitialConditionSet, Interp,
    MatrixFunction, TimeFunctionTable, ValidatedProblem,
};
use fracdelay::special::MlEvalConfig;
use fracdelay::Error;
use nalgebra::{dmatrix, DMatrix, DVector};
use proptest::prelude::*;

fn cfg() -> MlEvalConfig {
    MlEvalConfig::default()
}

fn scalar(a0: f64, a1: f64) -> ValidatedProblem {
    let sys =
        FractionalDelaySystem::constant(1.0, vec![0.0, 1.0], vec![dmatrix![a0], dmatrix![a1]]);
    let ics = InitialConditionSet::constant(vec![DVector::from_element(1, 1.0)]);
    validate_system(sys, ics, ControlInput::None).unwrap()
}

fn with_b(mut p: ValidatedProblem, b: f64) -> ValidatedProblem {
    p.sys.b = MatrixFunction::Constant(dmatrix![b]);
    p
}

fn gains(k: &[f64]) -> ControlInput {
    ControlInput::Feedback {
        gains: k
            .iter()
            .map(|&v| Gain {
                matrix: MatrixFunction::Constant(dmatrix![v]),
                bound: v.abs(),
            })
            .collect(),
    }
}

#[test]
fn uniform_certificate_closed_form() {
    for &a in &[0.0, 0.5, 1.0, 2.0] {
        for &d in &[0.1, 1.0, 10.0] {
            let g = cert_g_h(&scalar(-1.0, a), d, &cfg()).unwrap();
            let want = (-d).exp() + a * (1.0 - (-d).exp());
            assert!((g.value - want).abs() < 1e-8, "a = {a}, delta = {d}");
            assert!(g.feasible);
        }
    }
}

#[test]
fn windowed_certificate_closed_form() {
    let p = scalar(-1.0, 0.5);
    let g = cert_g_hat_h(&p, 2.0, 1.0, &cfg()).unwrap();
    let want = (-1f64).exp() + ((1.0 - (-2f64).exp()) / 2.0).sqrt() * 0.5;
    assert!((g.value - want).abs() < 1e-8);
    assert!((g.value - 0.6967).abs() < 1e-4);

    // no perturbation: only the free term is left, for every t
    let q = scalar(-1.0, 0.0);
    for &t in &[0.0, 3.0, 7.5] {
        let g = cert_g_hat_h(&q, t, 1.0, &cfg()).unwrap();
        assert!((g.value - (-1f64).exp()).abs() < 1e-12);
    }

    // constant Ã₀ ≡ c: denominator factor is L₂(δ) |c| √δ
    let mut r = scalar(-1.0, 0.0);
    r.sys.a_tilde[0] = MatrixFunction::Constant(dmatrix![0.4]);
    let g = cert_g_hat_h(&r, 0.0, 2.0, &cfg()).unwrap();
    let l2 = ((1.0 - (-4f64).exp()) / 2.0).sqrt();
    let want = (-2f64).exp() / (1.0 - l2 * 0.4 * 2f64.sqrt());
    assert!((g.value - want).abs() < 1e-8);
}

#[test]
fn windowed_certificate_reads_table_windows() {
    // Â₁ = A₁ + Ã₁ with Ã₁ a ramp: the window of t - r₁ is used
    let ramp = TimeFunctionTable::new(
        vec![-1.0, 0.0, 10.0],
        vec![dmatrix![0.0], dmatrix![0.0], dmatrix![1.0]],
        Interp::Linear,
        None,
    )
    .unwrap();
    let mut p = scalar(-1.0, 0.0);
    p.sys.a_tilde[1] = MatrixFunction::Table(ramp);
    let g = cert_g_hat_h(&p, 1.0, 1.0, &cfg()).unwrap();
    // window [0, 1] of 0.1 s: L² = 0.1/√3
    let l2 = ((1.0 - (-2f64).exp()) / 2.0).sqrt();
    let want = (-1f64).exp() + l2 * 0.1 / 3f64.sqrt();
    assert!((g.value - want).abs() < 1e-8, "{} vs {want}", g.value);
    assert!(matches!(
        cert_g_hat_h(&p, 20.0, 1.0, &cfg()),
        Err(Error::WindowOutOfRange { .. })
    ));
}

#[test]
fn feedback_certificates() {
    let p = with_b(scalar(-1.0, 0.3), 1.0);
    let g = cert_g_f(&p, &gains(&[0.2, 0.1]), f64::INFINITY, &cfg()).unwrap();
    assert!((g.value - 0.5).abs() < 1e-10);
    let zero = cert_g_f(&p, &gains(&[0.0, 0.0]), 1.5, &cfg()).unwrap();
    let plain = cert_g_h(&p, 1.5, &cfg()).unwrap();
    assert!((zero.value - plain.value).abs() < 1e-12);
    let big = cert_g_f(&p, &gains(&[1.5, 0.0]), 10.0, &cfg()).unwrap();
    assert!(!big.feasible);

    let zh = cert_g_hat_f(&p, &gains(&[0.0, 0.0]), 0.5, 1.0, &cfg()).unwrap();
    let h = cert_g_hat_h(&p, 0.5, 1.0, &cfg()).unwrap();
    assert!((zh.value - h.value).abs() < 1e-12);
    // constant B K₁ adds |B K₁| √δ to the numerator window term
    let k1 = cert_g_hat_f(&p, &gains(&[0.0, 0.2]), 0.5, 1.0, &cfg()).unwrap();
    let l2 = ((1.0 - (-2f64).exp()) / 2.0).sqrt();
    assert!((k1.value - (h.value + l2 * 0.2)).abs() < 1e-10);
}

#[test]
fn gain_bounds() {
    let p = with_b(scalar(-1.0, 0.0), 2.0);
    let v = gain_bound_uniform(&p, f64::INFINITY, 0.4, &cfg()).unwrap();
    assert!((v - 0.1).abs() < 1e-12);
    let p = with_b(scalar(-1.0, 0.0), 1.0);
    let v = gain_bound_l2(&p, 1.0, 0.2, &[], &cfg()).unwrap();
    let l2 = ((1.0 - (-2f64).exp()) / 2.0).sqrt();
    assert!((l2 - 0.6577).abs() < 3e-4);
    assert!((v - 0.2 / l2).abs() < 1e-10);
    assert!((v - 0.3041).abs() < 1e-4);
    let p = with_b(scalar(-1.0, 0.0), 0.0);
    assert!(gain_bound_l2(&p, 1.0, 0.2, &[], &cfg())
        .unwrap()
        .is_infinite());
}

#[test]
fn verdicts_on_scalar_fixtures() {
    let grid = default_delta_grid();
    let r = certify(&scalar(-1.0, 0.5), None, &grid, &[], &cfg()).unwrap();
    assert_eq!(r.verdict, Verdict::ContractiveGAS);
    assert!(r.contraction_constant.unwrap() <= 0.684);
    assert_eq!(r.family, Family::GH);
    assert_eq!(r.state_bound, Some(1.0));
    let r = certify(&scalar(-1.0, 1.0), None, &grid, &[], &cfg()).unwrap();
    assert_eq!(r.verdict, Verdict::NonExpansiveStable);
    let r = certify(&scalar(-1.0, 2.0), None, &grid, &[0.0, 1.0], &cfg()).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert!(r.contraction_constant.is_none());
    assert_eq!(r.families.len(), 2);
}

#[test]
fn windowed_family_can_win() {
    // a short burst in Ã₁ hurts the uniform bound but not a late window
    let burst = TimeFunctionTable::new(
        vec![-1.0, 0.0, 0.5, 1.0, 100.0],
        vec![
            dmatrix![0.0],
            dmatrix![0.0],
            dmatrix![2.0],
            dmatrix![0.0],
            dmatrix![0.0],
        ],
        Interp::Linear,
        None,
    )
    .unwrap();
    let mut p = scalar(-1.0, 0.2);
    p.sys.a_tilde[1] = MatrixFunction::Table(burst);
    let grid = [1.0, 3.0, 10.0];
    let r = certify(&p, None, &grid, &[5.0, 20.0], &cfg()).unwrap();
    assert_eq!(r.family, Family::GHatH);
    assert_eq!(r.verdict, Verdict::ContractiveGAS);
}

fn delay_free(a: f64, tilde: f64, x0: f64) -> ValidatedProblem {
    let mut sys = FractionalDelaySystem::constant(
        1.0,
        vec![0.0, 0.0],
        vec![dmatrix![a * 0.5], dmatrix![a * 0.5]],
    );
    sys.a_tilde[0] = MatrixFunction::Constant(dmatrix![tilde]);
    let ics = InitialConditionSet::constant(vec![DVector::from_element(1, x0)]);
    validate_system(sys, ics, ControlInput::None).unwrap()
}

#[test]
fn delay_free_bounds() {
    let b = delay_free_certify(&delay_free(-1.0, 0.0, 3.0), None, &cfg()).unwrap();
    assert!((b.k0_bar - 1.0).abs() < 1e-9);
    assert!((b.k1_bar - 1.0).abs() < 1e-9);
    assert!((b.k2_bar.unwrap() - 3.0).abs() < 1e-8);
    assert!(b.decay_detected);
    assert_eq!(b.verdict, DelayFreeVerdict::GloballyAsymptoticallyStable);

    let b = delay_free_certify(&delay_free(-1.0, 0.5, 3.0), None, &cfg()).unwrap();
    assert!((b.k2_bar.unwrap() - 6.0).abs() < 1e-8);

    let b = delay_free_certify(&delay_free(-1.0, 1.5, 3.0), None, &cfg()).unwrap();
    assert!(b.k2_bar.is_none());
    assert_eq!(b.verdict, DelayFreeVerdict::Inconclusive);

    assert_eq!(
        delay_free_certify(&scalar(-1.0, 0.5), None, &cfg()).unwrap_err(),
        Error::DelaysNotZero
    );
    assert!(matches!(
        delay_free_certify(&delay_free(1.0, 0.0, 1.0), None, &cfg()),
        Err(Error::KernelNotIntegrable(_))
    ));
}

#[test]
fn delay_free_feedback_folding() {
    // Σ A_i = -0.5 is weak, a constant K₀ = -1 through B = 1 makes it -1.5
    let mut p = delay_free(-0.5, 0.0, 1.0);
    p.sys.b = MatrixFunction::Constant(dmatrix![1.0]);
    let fb = gains(&[-1.0, 0.0]);
    let b = delay_free_certify(&p, Some(&fb), &cfg()).unwrap();
    assert!((b.k1_bar - 1.0 / 1.5).abs() < 1e-9);
    assert!((b.k2_bar.unwrap() - 1.0).abs() < 1e-8);
}

fn high_order(phi: [f64; 3]) -> ValidatedProblem {
    let sys =
        FractionalDelaySystem::constant(2.5, vec![0.0, 1.0], vec![dmatrix![-1.0], dmatrix![0.1]]);
    let ics =
        InitialConditionSet::constant(phi.iter().map(|&v| DVector::from_element(1, v)).collect());
    validate_system(sys, ics, ControlInput::None).unwrap()
}

#[test]
fn high_order_zeroing_rule() {
    let r = high_order_check(&high_order([1.0, 0.0, 0.0]), None).unwrap();
    assert_eq!(r.verdict, HighOrderVerdict::InitialDataNotZero);
    let r = high_order_check(&high_order([0.0, 1.0, 0.0]), None).unwrap();
    assert_eq!(r.nonzero_initial, vec![1]);
    // φ₂ is exempt; the spectral test then decides
    let r = high_order_check(&high_order([0.0, 0.0, 4.0]), None).unwrap();
    assert!(r.nonzero_initial.is_empty());
    assert_eq!(r.verdict, HighOrderVerdict::SpectralTestFailed);

    let sys = FractionalDelaySystem::constant(2.0, vec![0.0], vec![dmatrix![-1.0]]);
    let ics = InitialConditionSet::constant(vec![
        DVector::from_element(1, 1.0),
        DVector::from_element(1, 0.0),
    ]);
    let p = validate_system(sys, ics, ControlInput::None).unwrap();
    assert_eq!(
        high_order_check(&p, None).unwrap().verdict,
        HighOrderVerdict::InitialDataNotZero
    );
    assert!(matches!(
        high_order_check(&scalar(-1.0, 0.5), None),
        Err(Error::OrderTooLow(_))
    ));
}

fn random_problem(a: &[f64], alpha: f64) -> ValidatedProblem {
    let m = |k: usize| DMatrix::from_fn(2, 2, |i, j| a[(4 * k + 2 * i + j) % a.len()]);
    let a0 = m(0) * 0.3 - DMatrix::identity(2, 2) * 2.0;
    let sys = FractionalDelaySystem::constant(alpha, vec![0.0, 0.7], vec![a0, m(1) * 0.4]);
    let ics = InitialConditionSet::constant(vec![DVector::from_element(2, 1.0)]);
    validate_system(sys, ics, ControlInput::None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bigger_perturbations_never_help(
        a in prop::collection::vec(-1.0..1.0f64, 8),
        alpha in 0.5..1.0f64,
        scale in 1.0..3.0f64,
        delta in 0.1..5.0f64,
    ) {
        let p = random_problem(&a, alpha);
        let mut q = p.clone();
        q.sys.a[1] *= scale;
        let g = cert_g_h(&p, delta, &cfg()).unwrap();
        let h = cert_g_h(&q, delta, &cfg()).unwrap();
        prop_assert!(h.value >= g.value * (1.0 - 1e-12));
    }

    #[test]
    fn zero_gains_reduce_to_the_plain_certificate(
        a in prop::collection::vec(-1.0..1.0f64, 8),
        alpha in 0.5..1.0f64,
        delta in 0.1..5.0f64,
    ) {
        let p = random_problem(&a, alpha);
        let fb = ControlInput::Feedback {
            gains: vec![
                Gain { matrix: MatrixFunction::Constant(DMatrix::zeros(1, 2)), bound: 0.0 };
                2
            ],
        };
        let g = cert_g_h(&p, delta, &cfg()).unwrap();
        let f = cert_g_f(&p, &fb, delta, &cfg()).unwrap();
        prop_assert!((g.value - f.value).abs() <= 1e-12 * g.value.max(1.0));
    }
}
