use fracdelay::io::{dump_normalized, parse_problem};
use proptest::prelude::*;
use serde_json::json;

fn problem_text(alpha: f64, a: &[f64], tilde: &[f64], phi: &[f64], feedback: bool) -> String {
    let k = alpha.ceil() as usize;
    let phi: Vec<_> = (0..k)
        .map(|j| {
            let v = phi[j % phi.len()];
            json!({"times": [-0.5, -0.2, 0.0], "values": [[v, -v], [0.5 * v, v], [v, 0.25]], "interp": "linear"})
        })
        .collect();
    let mut doc = json!({
        "alpha": alpha,
        "delays": [0.0, 0.5],
        "A": [[[a[0], a[1]], [a[2], a[3]]], [[a[4], 0.0], [0.0, a[5]]]],
        "A_tilde": [
            {"times": [0.0, 1.0, 3.0], "values": [
                [[tilde[0], 0.0], [0.0, tilde[1]]],
                [[tilde[1], tilde[2]], [0.0, 0.0]],
                [[0.0, 0.0], [tilde[2], tilde[0]]]
            ], "interp": "const"},
            [[0.0, 0.0], [0.0, 0.0]]
        ],
        "B": [[1.0], [a[0]]],
        "phi": phi,
    });
    if feedback {
        doc["control"] = json!({"type": "feedback", "gains": [
            {"matrix": [[a[1], a[2]]]},
            {"matrix": {"times": [0.0, 2.0], "values": [[[0.1, 0.0]], [[0.0, a[3]]]]}, "bound": 5.0}
        ]});
    } else {
        doc["control"] = json!({"type": "open_loop", "u": {"times": [0.0, 1.0], "values": [[1.0], [a[5]]], "interp": "const"}});
    }
    doc.to_string()
}

#[test]
fn fixture_style_file_parses() {
    let text = problem_text(
        1.4,
        &[-1.0, 0.2, 0.0, -2.0, 0.3, 0.1],
        &[0.1, 0.2, 0.3],
        &[1.0],
        true,
    );
    let p = parse_problem(&text).unwrap();
    assert_eq!(p.k(), 2);
    assert_eq!(p.n(), 2);
}

#[test]
fn endpoint_mismatch_is_reported() {
    let text = r#"{"alpha": 1, "delays": [0], "A": [[[-1]]],
        "phi": [{"times": [-1, -0.5], "values": [[1], [2]], "interp": "const"}]}"#;
    // the table holds its last value, so φ(0) = 2 = x₀ and this is valid
    assert!(parse_problem(text).is_ok());
    let text = r#"{"alpha": 1.5, "delays": [0], "A": [[[-1]]], "phi": [[1]]}"#;
    assert!(parse_problem(text).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalized_dump_round_trips(
        alpha in 0.2..3.0f64,
        a in prop::collection::vec(-3.0..3.0f64, 6),
        tilde in prop::collection::vec(-1.0..1.0f64, 3),
        phi in prop::collection::vec(-2.0..2.0f64, 1..4),
        feedback in any::<bool>(),
    ) {
        let p = parse_problem(&problem_text(alpha, &a, &tilde, &phi, feedback)).unwrap();
        let dumped = dump_normalized(&p);
        let q = parse_problem(&dumped).unwrap();
        prop_assert_eq!(&p, &q);
        prop_assert_eq!(dumped, dump_normalized(&q));
    }
}
