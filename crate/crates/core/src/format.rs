//! Fixed number formatting for every text artifact.

use serde::Serializer;

/// `x` with 15 significant digits in scientific notation, so equal inputs
/// always print the same bytes. Non-finite values print as `inf`, `-inf`
/// and `nan`.
pub fn sig15(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        // normalise -0 so sign noise does not leak into outputs
        let x = if x == 0.0 { 0.0 } else { x };
        format!("{x:.14e}")
    }
}

/// Rounds to 15 significant digits; the value round-trips through
/// [`sig15`] unchanged.
pub fn round15(x: f64) -> f64 {
    if x.is_finite() {
        sig15(x).parse().unwrap_or(x)
    } else {
        x
    }
}

/// Serde adapter writing an `f64` rounded to 15 significant digits.
/// Non-finite values become `null`, which JSON cannot otherwise carry.
pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(round15(*x))
    } else {
        s.serialize_none()
    }
}

/// [`ser_f64`] for optional values.
pub fn ser_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_f64(v, s),
        None => s.serialize_none(),
    }
}

/// [`ser_f64`] for sequences.
pub fn ser_vec_f64<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        if x.is_finite() {
            seq.serialize_element(&round15(*x))?;
        } else {
            seq.serialize_element(&Option::<f64>::None)?;
        }
    }
    seq.end()
}
