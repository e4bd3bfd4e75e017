use crate::error::{Error, Result};

/// Largest argument for which Γ(x) is finite in f64.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Γ(x) for real `x`, with the reflection formula applied for negative
/// arguments.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidArgument("gamma of NaN".into()));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::PoleAtNonpositiveInteger(x));
    }
    if x > GAMMA_MAX_ARG {
        return Err(Error::OverflowBeyondRepresentableRange(x));
    }
    let g = libm::tgamma(x);
    if !g.is_finite() {
        return Err(Error::OverflowBeyondRepresentableRange(x));
    }
    Ok(g)
}

/// ln|Γ(x)| together with the sign of Γ(x).
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    let (lg, sign) = libm::lgamma_r(x);
    (lg, if sign < 0 { -1.0 } else { 1.0 })
}

/// 1/Γ(x), an entire function: zero at the poles of Γ and finite everywhere
/// it does not overflow.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x > 0.0 && x <= 170.0 {
        return 1.0 / libm::tgamma(x);
    }
    if x > 170.0 {
        return (-libm::lgamma(x)).exp();
    }
    if x > -170.0 {
        return 1.0 / libm::tgamma(x);
    }
    // 1/Γ(x) = Γ(1 - x) sin(πx) / π for very negative x
    let (lg, sign) = ln_gamma_signed(1.0 - x);
    sign * lg.exp() * sin_pi(x) / std::f64::consts::PI
}

/// sin(πx) with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r == r.round() {
        return 0.0;
    }
    (std::f64::consts::PI * r).sin()
}
