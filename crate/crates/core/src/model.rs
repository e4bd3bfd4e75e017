//! System description: order, delays, dynamics matrices, initial data and
//! controls, plus the sampled time-function tables they are built from.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{induced_norm, norm2, NormP};

/// Absolute tolerance for φ_j(0) = x_{j0}.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Interpolation rule between table samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    /// Piecewise linear, held constant outside the sampled range.
    Linear,
    /// Value v_k on [t_k, t_{k+1}); left-continuous limits are available
    /// through [`Side::Left`].
    Const,
}

/// Which one-sided value to take at a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A matrix (or column-vector) valued function of time given by samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFunctionTable {
    times: Vec<f64>,
    values: Vec<DMatrix<f64>>,
    interp: Interp,
    declared_sup_norm: Option<f64>,
}

impl TimeFunctionTable {
    pub fn new(
        times: Vec<f64>,
        values: Vec<DMatrix<f64>>,
        interp: Interp,
        declared_sup_norm: Option<f64>,
    ) -> Result<Self> {
        if times.is_empty() || values.is_empty() {
            return Err(Error::EmptyTable);
        }
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} sample times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::UnsortedTable);
        }
        let shape = values[0].shape();
        if values.iter().any(|v| v.shape() != shape) {
            return Err(Error::DimensionMismatch(
                "table values differ in shape".into(),
            ));
        }
        if values.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidArgument("table values must be finite".into()));
        }
        if let Some(d) = declared_sup_norm {
            if !(d >= 0.0) {
                return Err(Error::InvalidArgument(
                    "declared sup-norm must be nonnegative".into(),
                ));
            }
            let observed = values.iter().map(norm2).fold(0.0, f64::max);
            if observed > d * (1.0 + 1e-12) {
                return Err(Error::DeclaredBoundViolated {
                    declared: d,
                    observed,
                });
            }
        }
        Ok(Self {
            times,
            values,
            interp,
            declared_sup_norm,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn declared_sup_norm(&self) -> Option<f64> {
        self.declared_sup_norm
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values[0].shape()
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("nonempty table")
    }

    /// Right-continuous value at `t`.
    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        self.eval_side(t, Side::Right)
    }

    pub fn eval_side(&self, t: f64, side: Side) -> DMatrix<f64> {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0].clone();
        }
        if t >= self.times[n - 1] {
            if self.interp == Interp::Const && side == Side::Left && t == self.times[n - 1] {
                return self.values[n - 2].clone();
            }
            return self.values[n - 1].clone();
        }
        // times[k] <= t < times[k + 1]
        let k = self.times.partition_point(|&s| s <= t) - 1;
        match self.interp {
            Interp::Const => {
                if side == Side::Left && t == self.times[k] {
                    self.values[k - 1].clone()
                } else {
                    self.values[k].clone()
                }
            }
            Interp::Linear => {
                let (t0, t1) = (self.times[k], self.times[k + 1]);
                let w = (t - t0) / (t1 - t0);
                &self.values[k] * (1.0 - w) + &self.values[k + 1] * w
            }
        }
    }

    /// Largest sampled induced norm.
    pub fn sample_sup_norm(&self, p: NormP) -> f64 {
        self.values
            .iter()
            .map(|v| induced_norm(v, p))
            .fold(0.0, f64::max)
    }

    /// Same table with every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            interp: self.interp,
            declared_sup_norm: self.declared_sup_norm.map(|d| d * c.abs()),
        }
    }
}

/// Bound on sup_t ‖M(t)‖_p: the declared bound when present, otherwise the
/// largest sampled norm. The sampled value is only a lower estimate of the
/// true supremum of the interpolant for rules that could overshoot; for the
/// linear and piecewise-constant rules used here it is exact.
pub fn sup_norm_bound(tbl: &TimeFunctionTable, p: NormP) -> Result<f64> {
    if tbl.times.is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(tbl
        .declared_sup_norm
        .unwrap_or_else(|| tbl.sample_sup_norm(p)))
}

/// (∫_0^δ ‖M(t + τ)‖₂² dτ)^{1/2}.
pub fn l2_window_norm(tbl: &TimeFunctionTable, t: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(
            "window length must be positive".into(),
        ));
    }
    check_window(tbl, t, t + delta)?;
    Ok(window_sq_integral(t, t + delta, tbl.times(), |s, side| {
        norm2(&tbl.eval_side(s, side)).powi(2)
    })
    .sqrt())
}

fn check_window(tbl: &TimeFunctionTable, start: f64, end: f64) -> Result<()> {
    let (first, last) = (tbl.first_time(), tbl.last_time());
    let slack = 1e-12 * (1.0 + first.abs().max(last.abs()));
    if start < first - slack || end > last + slack {
        return Err(Error::WindowOutOfRange {
            start,
            end,
            first,
            last,
        });
    }
    Ok(())
}

/// ∫_start^end f(s) ds for an integrand that is smooth between the given
/// breakpoints. Each piece gets composite Simpson on 8 sub-panels, with the
/// endpoints evaluated as one-sided limits from inside the piece.
pub(crate) fn window_sq_integral<F>(start: f64, end: f64, breaks: &[f64], f: F) -> f64
where
    F: Fn(f64, Side) -> f64,
{
    const SUB: usize = 8;
    let mut cuts = vec![start];
    cuts.extend(breaks.iter().copied().filter(|&b| b > start && b < end));
    cuts.push(end);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let h = (b - a) / SUB as f64;
        let mut s = f(a, Side::Right) + f(b, Side::Left);
        for i in 1..SUB {
            let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += weight * f(a + i as f64 * h, Side::Right);
        }
        total += s * h / 3.0;
    }
    total
}

/// A matrix function of time: either constant or tabulated.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixFunction {
    Constant(DMatrix<f64>),
    Table(TimeFunctionTable),
}

impl MatrixFunction {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatrixFunction::Constant(DMatrix::zeros(rows, cols))
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixFunction::Constant(m) => m.shape(),
            MatrixFunction::Table(t) => t.shape(),
        }
    }

    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        self.eval_side(t, Side::Right)
    }

    pub fn eval_side(&self, t: f64, side: Side) -> DMatrix<f64> {
        match self {
            MatrixFunction::Constant(m) => m.clone(),
            MatrixFunction::Table(tbl) => tbl.eval_side(t, side),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            MatrixFunction::Constant(m) => m.iter().all(|&x| x == 0.0),
            MatrixFunction::Table(t) => t.values.iter().all(|m| m.iter().all(|&x| x == 0.0)),
        }
    }

    pub fn as_constant(&self) -> Option<&DMatrix<f64>> {
        match self {
            MatrixFunction::Constant(m) => Some(m),
            MatrixFunction::Table(_) => None,
        }
    }

    /// Sample times where the function may be non-smooth.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            MatrixFunction::Constant(_) => &[],
            MatrixFunction::Table(t) => t.times(),
        }
    }

    pub fn sup_norm(&self, p: NormP) -> f64 {
        match self {
            MatrixFunction::Constant(m) => induced_norm(m, p),
            MatrixFunction::Table(t) => t.declared_sup_norm.unwrap_or_else(|| t.sample_sup_norm(p)),
        }
    }

    /// Sup-norm bound of `offset + self(t)`: exact for constants, the
    /// triangle bound ‖offset‖ + declared when a bound is declared, and the
    /// largest sampled norm otherwise.
    pub fn shifted_sup_norm(&self, offset: &DMatrix<f64>, p: NormP) -> f64 {
        match self {
            MatrixFunction::Constant(m) => induced_norm(&(offset + m), p),
            MatrixFunction::Table(t) => match t.declared_sup_norm {
                Some(d) => induced_norm(offset, p) + d,
                None => t
                    .values
                    .iter()
                    .map(|v| induced_norm(&(offset + v), p))
                    .fold(0.0, f64::max),
            },
        }
    }

    /// Whether the window [start, end] lies inside the tabulated range.
    pub fn covers(&self, start: f64, end: f64) -> Result<()> {
        match self {
            MatrixFunction::Constant(_) => Ok(()),
            MatrixFunction::Table(t) => check_window(t, start, end),
        }
    }

    pub fn l2_window(&self, t: f64, delta: f64) -> Result<f64> {
        match self {
            MatrixFunction::Constant(m) => {
                if !(delta > 0.0) {
                    return Err(Error::InvalidArgument(
                        "window length must be positive".into(),
                    ));
                }
                Ok(norm2(m) * delta.sqrt())
            }
            MatrixFunction::Table(tbl) => l2_window_norm(tbl, t, delta),
        }
    }

    /// (∫_0^δ ‖offset + M(t + τ)‖₂² dτ)^{1/2}.
    pub fn shifted_l2_window(&self, offset: &DMatrix<f64>, t: f64, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(
                "window length must be positive".into(),
            ));
        }
        match self {
            MatrixFunction::Constant(m) => Ok(norm2(&(offset + m)) * delta.sqrt()),
            MatrixFunction::Table(tbl) => {
                check_window(tbl, t, t + delta)?;
                Ok(window_sq_integral(t, t + delta, tbl.times(), |s, side| {
                    norm2(&(offset + tbl.eval_side(s, side))).powi(2)
                })
                .sqrt())
            }
        }
    }
}

/// (∫_0^δ ‖B(t + τ) K(t + τ)‖₂² dτ)^{1/2}.
pub fn product_l2_window(
    b: &MatrixFunction,
    k: &MatrixFunction,
    t: f64,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(
            "window length must be positive".into(),
        ));
    }
    if let (Some(bm), Some(km)) = (b.as_constant(), k.as_constant()) {
        return Ok(norm2(&(bm * km)) * delta.sqrt());
    }
    b.covers(t, t + delta)?;
    k.covers(t, t + delta)?;
    let mut breaks: Vec<f64> = b
        .breakpoints()
        .iter()
        .chain(k.breakpoints())
        .copied()
        .collect();
    breaks.sort_by(f64::total_cmp);
    Ok(window_sq_integral(t, t + delta, &breaks, |s, side| {
        norm2(&(b.eval_side(s, side) * k.eval_side(s, side))).powi(2)
    })
    .sqrt())
}

/// Number of initial functions for order α: the integer k with k-1 < α ≤ k.
pub fn derivative_count(alpha: f64) -> usize {
    alpha.ceil().max(1.0) as usize
}

/// The delayed Caputo system
/// D^α x(t) = Σ_i (A_i + Ã_i(t)) x(t - r_i) + B(t) u(t).
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalDelaySystem {
    pub alpha: f64,
    pub delays: Vec<f64>,
    pub a: Vec<DMatrix<f64>>,
    pub a_tilde: Vec<MatrixFunction>,
    pub b: MatrixFunction,
}

impl FractionalDelaySystem {
    /// System with constant delayed matrices, no time-varying parts and a
    /// zero n×1 input matrix.
    pub fn constant(alpha: f64, delays: Vec<f64>, a: Vec<DMatrix<f64>>) -> Self {
        let n = a.first().map(|m| m.nrows()).unwrap_or(0);
        let a_tilde = a.iter().map(|_| MatrixFunction::zeros(n, n)).collect();
        Self {
            alpha,
            delays,
            a,
            a_tilde,
            b: MatrixFunction::zeros(n, 1),
        }
    }

    pub fn k(&self) -> usize {
        derivative_count(self.alpha)
    }

    pub fn n(&self) -> usize {
        self.a.first().map(|m| m.nrows()).unwrap_or(0)
    }

    pub fn m(&self) -> usize {
        self.b.shape().1
    }

    /// Index of the last delay, so there are r + 1 delayed terms.
    pub fn r(&self) -> usize {
        self.delays.len().saturating_sub(1)
    }

    /// Largest delay h.
    pub fn h(&self) -> f64 {
        self.delays.last().copied().unwrap_or(0.0)
    }

    pub fn a0(&self) -> &DMatrix<f64> {
        &self.a[0]
    }

    pub fn is_delay_free(&self) -> bool {
        self.delays.iter().all(|&d| d == 0.0)
    }

    /// Σ_i A_i, the effective constant matrix when all delays vanish.
    pub fn a_sum(&self) -> DMatrix<f64> {
        let n = self.n();
        self.a.iter().fold(DMatrix::zeros(n, n), |acc, m| acc + m)
    }

    /// ‖Ã_i‖_∞.
    pub fn a_tilde_sup(&self, i: usize) -> f64 {
        self.a_tilde[i].sup_norm(NormP::Two)
    }

    /// ‖Â_i‖_∞ = sup_t ‖A_i + Ã_i(t)‖.
    pub fn a_hat_sup(&self, i: usize) -> f64 {
        self.a_tilde[i].shifted_sup_norm(&self.a[i], NormP::Two)
    }

    pub fn b_sup(&self) -> f64 {
        self.b.sup_norm(NormP::Two)
    }
}

/// The k initial functions φ_j on [-h, 0] and their values x_{j0} = φ_j(0).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditionSet {
    pub phi: Vec<MatrixFunction>,
    pub x0: Vec<DVector<f64>>,
}

impl InitialConditionSet {
    /// Takes x_{j0} from φ_j(0).
    pub fn from_phi(phi: Vec<MatrixFunction>) -> Self {
        let x0 = phi
            .iter()
            .map(|f| f.eval(0.0).column(0).into_owned())
            .collect();
        Self { phi, x0 }
    }

    /// Constant initial functions φ_j ≡ c_j.
    pub fn constant(values: Vec<DVector<f64>>) -> Self {
        let phi = values
            .iter()
            .map(|v| MatrixFunction::Constant(DMatrix::from_column_slice(v.len(), 1, v.as_slice())))
            .collect();
        Self { phi, x0: values }
    }

    /// x̄(s) = Σ_j φ_j(s), the prehistory fed into the delayed terms.
    pub fn combined(&self, s: f64, side: Side) -> DVector<f64> {
        let n = self.x0.first().map(|v| v.len()).unwrap_or(0);
        let mut acc = DVector::zeros(n);
        for f in &self.phi {
            acc += f.eval_side(s, side).column(0);
        }
        acc
    }

    /// sup_{[-h,0]} Σ_j ‖φ_j‖_∞ over the sample points of the tables plus
    /// the interval endpoints.
    pub fn sup_sum_norm(&self, h: f64) -> f64 {
        let mut pts = vec![-h, 0.0];
        for f in &self.phi {
            pts.extend(
                f.breakpoints()
                    .iter()
                    .copied()
                    .filter(|&t| t >= -h && t <= 0.0),
            );
        }
        let mut best: f64 = 0.0;
        for &t in &pts {
            for side in [Side::Left, Side::Right] {
                let s: f64 = self.phi.iter().map(|f| f.eval_side(t, side).amax()).sum();
                best = best.max(s);
            }
        }
        best
    }
}

/// A gain K_i(t) (m×n) with its declared uniform bound K_i⁰.
#[derive(Debug, Clone, PartialEq)]
pub struct Gain {
    pub matrix: MatrixFunction,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum ControlInput {
    #[default]
    None,
    /// u(t) given directly, m×1 values; zero before t = 0.
    OpenLoop { u: MatrixFunction },
    /// u(t) = Σ_i K_i(t) x(t - r_i).
    Feedback { gains: Vec<Gain> },
}

impl ControlInput {
    /// Declared bounds K_i⁰, zero when there is no feedback.
    pub fn gain_bounds(&self, r: usize) -> Vec<f64> {
        match self {
            ControlInput::Feedback { gains } => gains.iter().map(|g| g.bound).collect(),
            _ => vec![0.0; r + 1],
        }
    }
}

/// A system, its initial data and control after every invariant was checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedProblem {
    pub sys: FractionalDelaySystem,
    pub ics: InitialConditionSet,
    pub ctrl: ControlInput,
}

impl ValidatedProblem {
    pub fn k(&self) -> usize {
        self.sys.k()
    }

    pub fn n(&self) -> usize {
        self.sys.n()
    }
}

/// Checks every structural invariant and returns the problem unchanged.
pub fn validate_system(
    sys: FractionalDelaySystem,
    ics: InitialConditionSet,
    ctrl: ControlInput,
) -> Result<ValidatedProblem> {
    if !(sys.alpha > 0.0) || !sys.alpha.is_finite() {
        return Err(Error::NonPositiveOrder(sys.alpha));
    }
    validate_delays(&sys.delays)?;
    let r1 = sys.delays.len();
    if sys.a.len() != r1 {
        return Err(Error::DimensionMismatch(format!(
            "{} delays but {} matrices A_i",
            r1,
            sys.a.len()
        )));
    }
    if sys.a_tilde.len() != r1 {
        return Err(Error::DimensionMismatch(format!(
            "{} delays but {} matrices A_tilde_i",
            r1,
            sys.a_tilde.len()
        )));
    }
    let n = sys.a[0].nrows();
    if n == 0 {
        return Err(Error::DimensionMismatch("state dimension is zero".into()));
    }
    for (i, m) in sys.a.iter().enumerate() {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("A_{i} is not {n}x{n}")));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "A_{i} has non-finite entries"
            )));
        }
    }
    for (i, m) in sys.a_tilde.iter().enumerate() {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "A_tilde_{i} is not {n}x{n}"
            )));
        }
    }
    let (bn, m_in) = sys.b.shape();
    if bn != n {
        return Err(Error::DimensionMismatch(format!(
            "B has {bn} rows, expected {n}"
        )));
    }
    let k = sys.k();
    if ics.phi.len() != k || ics.x0.len() != k {
        return Err(Error::EndpointMismatch(format!(
            "order {} needs {} initial functions, got {}",
            sys.alpha,
            k,
            ics.phi.len()
        )));
    }
    for (j, (f, x)) in ics.phi.iter().zip(&ics.x0).enumerate() {
        if f.shape() != (n, 1) || x.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "phi_{j} is not an {n}-vector"
            )));
        }
        let at0 = f.eval(0.0);
        let gap = (at0.column(0) - x).amax();
        if !(gap <= ENDPOINT_TOL) {
            return Err(Error::EndpointMismatch(format!(
                "phi_{j}(0) differs from x_{j}0 by {gap:e}"
            )));
        }
    }
    match &ctrl {
        ControlInput::None => {}
        ControlInput::OpenLoop { u } => {
            if u.shape() != (m_in, 1) {
                return Err(Error::DimensionMismatch(format!(
                    "u is not an {m_in}-vector"
                )));
            }
        }
        ControlInput::Feedback { gains } => {
            if gains.len() != r1 {
                return Err(Error::DimensionMismatch(format!(
                    "{} delays but {} feedback gains",
                    r1,
                    gains.len()
                )));
            }
            for (i, g) in gains.iter().enumerate() {
                if g.matrix.shape() != (m_in, n) {
                    return Err(Error::DimensionMismatch(format!("K_{i} is not {m_in}x{n}")));
                }
                if !(g.bound >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "K_{i} bound must be nonnegative"
                    )));
                }
                let observed = g.matrix.sup_norm(NormP::Two);
                let sampled = match &g.matrix {
                    MatrixFunction::Table(t) => t.sample_sup_norm(NormP::Two),
                    MatrixFunction::Constant(_) => observed,
                };
                if sampled > g.bound * (1.0 + 1e-12) {
                    return Err(Error::DeclaredBoundViolated {
                        declared: g.bound,
                        observed: sampled,
                    });
                }
            }
        }
    }
    Ok(ValidatedProblem { sys, ics, ctrl })
}

/// Delays must be r₀ = 0 < r₁ < … < r_r, or all exactly zero.
pub fn validate_delays(delays: &[f64]) -> Result<()> {
    if delays.is_empty() {
        return Err(Error::DelayOrderViolation("no delays given".into()));
    }
    if delays.iter().any(|d| !d.is_finite()) {
        return Err(Error::DelayOrderViolation("delays must be finite".into()));
    }
    if delays[0] != 0.0 {
        return Err(Error::DelayOrderViolation(format!(
            "first delay is {}",
            delays[0]
        )));
    }
    if delays.iter().all(|&d| d == 0.0) {
        return Ok(());
    }
    if let Some(w) = delays.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::DelayOrderViolation(format!(
            "{} is followed by {}",
            w[0], w[1]
        )));
    }
    Ok(())
}
