use fracdelay::linalg::NormP;
use fracdelay::model::{
    l2_window_norm, sup_norm_bound, validate_system, ControlInput, FractionalDelaySystem,
    InitialConditionSet, Interp, TimeFunctionTable,
};
use fracdelay::Error;
use nalgebra::{dmatrix, DMatrix, DVector};
use proptest::prelude::*;

fn one(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

#[test]
fn validation_examples() {
    let sys =
        FractionalDelaySystem::constant(0.5, vec![0.0, 1.0], vec![dmatrix![-1.0], dmatrix![0.5]]);
    let p = validate_system(
        sys,
        InitialConditionSet::constant(vec![one(1.0)]),
        ControlInput::None,
    )
    .unwrap();
    assert_eq!(p.k(), 1);

    let sys = FractionalDelaySystem::constant(
        0.5,
        vec![0.0, 1.0, 1.0],
        vec![dmatrix![-1.0], dmatrix![0.5], dmatrix![0.1]],
    );
    let e = validate_system(
        sys,
        InitialConditionSet::constant(vec![one(1.0)]),
        ControlInput::None,
    );
    assert!(matches!(e, Err(Error::DelayOrderViolation(_))));

    let sys = FractionalDelaySystem::constant(1.5, vec![0.0], vec![dmatrix![-1.0]]);
    let e = validate_system(
        sys,
        InitialConditionSet::constant(vec![one(1.0)]),
        ControlInput::None,
    );
    assert!(matches!(e, Err(Error::EndpointMismatch(_))));

    let sys = FractionalDelaySystem::constant(0.0, vec![0.0], vec![dmatrix![-1.0]]);
    let e = validate_system(
        sys,
        InitialConditionSet::constant(vec![one(1.0)]),
        ControlInput::None,
    );
    assert_eq!(e.unwrap_err(), Error::NonPositiveOrder(0.0));
}

#[test]
fn sup_norm_examples() {
    let c = TimeFunctionTable::new(vec![0.0], vec![dmatrix![-1.0]], Interp::Const, None).unwrap();
    assert_eq!(sup_norm_bound(&c, NormP::Two).unwrap(), 1.0);
    let i2 = DMatrix::<f64>::identity(2, 2);
    let t = TimeFunctionTable::new(
        vec![0.0, 1.0],
        vec![i2.clone(), &i2 * 2.0],
        Interp::Linear,
        None,
    )
    .unwrap();
    assert_eq!(sup_norm_bound(&t, NormP::Two).unwrap(), 2.0);
    let d = TimeFunctionTable::new(
        vec![0.0, 1.0],
        vec![i2.clone(), &i2 * 2.0],
        Interp::Linear,
        Some(3.0),
    )
    .unwrap();
    assert_eq!(sup_norm_bound(&d, NormP::Two).unwrap(), 3.0);
    let bad = TimeFunctionTable::new(vec![0.0], vec![&i2 * 5.0], Interp::Linear, Some(3.0));
    assert!(matches!(bad, Err(Error::DeclaredBoundViolated { .. })));
    assert_eq!(
        TimeFunctionTable::new(vec![], vec![], Interp::Linear, None).unwrap_err(),
        Error::EmptyTable
    );
}

#[test]
fn window_examples() {
    let z = TimeFunctionTable::new(vec![0.0, 2.0], vec![dmatrix![0.0]; 2], Interp::Linear, None)
        .unwrap();
    assert_eq!(l2_window_norm(&z, 0.5, 1.0).unwrap(), 0.0);
    let c = TimeFunctionTable::new(vec![0.0, 5.0], vec![dmatrix![-3.0]; 2], Interp::Const, None)
        .unwrap();
    assert!((l2_window_norm(&c, 1.0, 2.0).unwrap() - 3.0 * 2f64.sqrt()).abs() < 1e-12);
    let ramp = TimeFunctionTable::new(
        vec![0.0, 1.0],
        vec![dmatrix![0.0], dmatrix![1.0]],
        Interp::Linear,
        None,
    )
    .unwrap();
    assert!((l2_window_norm(&ramp, 0.0, 1.0).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-10);
    assert!(matches!(
        l2_window_norm(&ramp, 0.5, 1.0),
        Err(Error::WindowOutOfRange { .. })
    ));
}

fn table(vals: &[f64], interp: Interp) -> TimeFunctionTable {
    let times: Vec<f64> = (0..vals.len()).map(|i| i as f64 * 0.5).collect();
    let values = vals
        .iter()
        .map(|&v| dmatrix![v, 0.5 * v; -v, 0.25])
        .collect();
    TimeFunctionTable::new(times, values, interp, None).unwrap()
}

fn sum(a: &TimeFunctionTable, b: &TimeFunctionTable) -> TimeFunctionTable {
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x + y)
        .collect();
    TimeFunctionTable::new(a.times().to_vec(), values, a.interp(), None).unwrap()
}

fn interp() -> impl Strategy<Value = Interp> {
    prop_oneof![Just(Interp::Linear), Just(Interp::Const)]
}

proptest! {
    #[test]
    fn window_norm_is_homogeneous(
        vals in prop::collection::vec(-3.0..3.0f64, 6),
        c in -4.0..4.0f64,
        t in 0.0..1.0f64,
        d in 0.1..1.4f64,
        mode in interp(),
    ) {
        let tbl = table(&vals, mode);
        let base = l2_window_norm(&tbl, t, d).unwrap();
        let scaled = l2_window_norm(&tbl.scaled(c), t, d).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-10 * (1.0 + base));
    }

    #[test]
    fn window_norm_is_subadditive(
        a in prop::collection::vec(-3.0..3.0f64, 6),
        b in prop::collection::vec(-3.0..3.0f64, 6),
        t in 0.0..1.0f64,
        d in 0.1..1.4f64,
        mode in interp(),
    ) {
        let (ta, tb) = (table(&a, mode), table(&b, mode));
        let lhs = l2_window_norm(&sum(&ta, &tb), t, d).unwrap();
        let rhs = l2_window_norm(&ta, t, d).unwrap() + l2_window_norm(&tb, t, d).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn adding_samples_never_lowers_the_sup_estimate(
        vals in prop::collection::vec(-3.0..3.0f64, 2..8),
        extra in -5.0..5.0f64,
    ) {
        let tbl = table(&vals, Interp::Linear);
        let mut more = vals.clone();
        more.push(extra);
        let bigger = table(&more, Interp::Linear);
        prop_assert!(
            sup_norm_bound(&bigger, NormP::Two).unwrap() >= sup_norm_bound(&tbl, NormP::Two).unwrap()
        );
    }
}
