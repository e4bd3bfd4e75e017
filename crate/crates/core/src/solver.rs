//! Trajectories of the delayed Volterra equation
//!
//! x(t) = Σ_j Φ_αj(t) x_{j0} + ∫_0^t Φ_α(t - τ) f(τ) dτ,
//! f(τ) = Σ_{i≥1} A_i x(τ - r_i) + Σ_i Ã_i(τ) x(τ - r_i) + B(τ) u(τ),
//!
//! by product integration on a uniform grid aligned with the delays. The
//! forcing f is interpolated linearly on each panel and integrated exactly
//! against Φ_α through its primitives Ψ₁ = t^α E_{α,α+1}(A t^α) and
//! Ψ₂ = t^{α+1} E_{α,α+2}(A t^α), so the (t - τ)^{α-1} singularity costs no
//! accuracy. f is stored with one-sided limits at every node, which keeps the
//! jumps where a delayed argument crosses from the prehistory into the
//! computed solution exact.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec::{map_indices, sum_vectors, try_map_indices, Execution};
use crate::format::sig15;
use crate::model::{ControlInput, InitialConditionSet, MatrixFunction, Side, ValidatedProblem};
use crate::special::{gamma_fn, Kernels, MlEvalConfig};

/// Sweeps allowed for the implicit node correction.
pub const MAX_SWEEPS: usize = 20;
/// Relative tolerance of the node correction.
pub const SWEEP_TOL: f64 = 1e-12;
/// How far r_i / Δt may sit from an integer.
pub const ALIGN_TOL: f64 = 1e-9;

/// Uniform time grid t_ℓ = ℓ Δt, ℓ = 0..node_count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationGrid {
    step: f64,
    horizon: f64,
    node_count: usize,
}

impl SimulationGrid {
    /// Grid with exactly the requested step.
    pub fn new(step: f64, horizon: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "step must be positive, got {step}"
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let node_count = (horizon / step + ALIGN_TOL).floor() as usize + 1;
        if node_count < 2 {
            return Err(Error::InvalidArgument(
                "horizon is shorter than one step".into(),
            ));
        }
        Ok(Self {
            step,
            horizon,
            node_count,
        })
    }

    /// Largest step ≤ `step` that divides every delay into a whole number of
    /// steps. Delays with no common step in reach are rejected.
    pub fn aligned(step: f64, horizon: f64, delays: &[f64]) -> Result<Self> {
        let positive: Vec<f64> = delays.iter().copied().filter(|&r| r > 0.0).collect();
        let Some(&r1) = positive.first() else {
            return Self::new(step, horizon);
        };
        if !(step > 0.0) {
            return Self::new(step, horizon);
        }
        let q0 = (r1 / step * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        for q in q0..q0 + 100_000 {
            let dt = r1 / q as f64;
            if positive.iter().all(|&r| is_multiple(r, dt)) {
                return Self::new(dt, horizon);
            }
        }
        Err(Error::InvalidArgument(
            "delays have no common step near the requested one".into(),
        ))
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn time(&self, l: usize) -> f64 {
        l as f64 * self.step
    }

    /// Whole number of steps in `r`, if `r` is aligned.
    pub fn steps_in(&self, r: f64) -> Option<usize> {
        is_multiple(r, self.step).then(|| (r / self.step).round() as usize)
    }
}

fn is_multiple(r: f64, dt: f64) -> bool {
    let q = r / dt;
    (q - q.round()).abs() <= ALIGN_TOL
}

/// Sampled solution together with the prehistory it was started from.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: SimulationGrid,
    pub states: Vec<DVector<f64>>,
    pub prehistory: InitialConditionSet,
}

impl Trajectory {
    /// The zero trajectory on `grid`, a starting point for Picard iteration.
    pub fn zeros(grid: SimulationGrid, n: usize, prehistory: InitialConditionSet) -> Self {
        Self {
            grid,
            states: vec![DVector::zeros(n); grid.node_count()],
            prehistory,
        }
    }

    pub fn dim(&self) -> usize {
        self.states.first().map(|v| v.len()).unwrap_or(0)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|l| self.grid.time(l)).collect()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states
            .last()
            .expect("a trajectory has at least two nodes")
    }

    /// max_ℓ ‖x(t_ℓ)‖_∞.
    pub fn sup_norm(&self) -> f64 {
        self.states.iter().map(|x| x.amax()).fold(0.0, f64::max)
    }

    /// max ‖x(t_ℓ)‖_∞ over nodes with t_ℓ in [a, b).
    pub fn window_sup(&self, a: f64, b: f64) -> f64 {
        let eps = 1e-9 * self.grid.step();
        self.states
            .iter()
            .enumerate()
            .filter(|(l, _)| {
                let t = self.grid.time(*l);
                t >= a - eps && t < b - eps
            })
            .map(|(_, x)| x.amax())
            .fold(0.0, f64::max)
    }

    /// x(t) by linear interpolation; the prehistory Σ_j φ_j for t < 0.
    pub fn value_at(&self, t: f64) -> DVector<f64> {
        if t < 0.0 {
            return self.prehistory.combined(t, Side::Right);
        }
        let pos = t / self.grid.step();
        let last = self.states.len() - 1;
        let l = (pos.floor() as usize).min(last);
        if l == last {
            return self.states[last].clone();
        }
        let w = pos - l as f64;
        &self.states[l] * (1.0 - w) + &self.states[l + 1] * w
    }

    /// max_ℓ ‖x(t_ℓ) - y(t_ℓ)‖_∞ on a shared grid.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,x1,…,xn` and 15 significant digits per value.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (l, x) in self.states.iter().enumerate() {
            out.push_str(&sig15(self.grid.time(l)));
            for v in x.iter() {
                out.push(',');
                out.push_str(&sig15(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Coefficient matrices of the delayed terms, evaluated at the nodes.
///
/// G_i(t) = A_i [r_i > 0] + Ã_i(t) + B(t) K_i(t); zero-delay A_i are folded
/// into the kernel generator instead.
struct Coefficients {
    n: usize,
    /// steps per delay
    lag: Vec<usize>,
    /// per node (or a single entry when nothing varies) and per side
    g_left: Vec<Vec<DMatrix<f64>>>,
    g_right: Vec<Vec<DMatrix<f64>>>,
    /// open-loop forcing B(t) u(t), per node and side; empty when absent
    v_left: Vec<DVector<f64>>,
    v_right: Vec<DVector<f64>>,
}

impl Coefficients {
    fn build(prob: &ValidatedProblem, grid: &SimulationGrid, exec: Execution) -> Result<Self> {
        let sys = &prob.sys;
        let n = sys.n();
        let lag = sys
            .delays
            .iter()
            .map(|&r| {
                grid.steps_in(r).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "delay {r} is not a multiple of the step {}",
                        grid.step()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let gains: Option<&Vec<crate::model::Gain>> = match &prob.ctrl {
            ControlInput::Feedback { gains } => Some(gains),
            _ => None,
        };
        let varies = sys.a_tilde.iter().any(|m| m.as_constant().is_none())
            || (gains.is_some() && sys.b.as_constant().is_none())
            || gains.is_some_and(|g| g.iter().any(|k| k.matrix.as_constant().is_none()));
        let eval = |t: f64, side: Side| -> Vec<DMatrix<f64>> {
            (0..sys.delays.len())
                .map(|i| {
                    let mut g = sys.a_tilde[i].eval_side(t, side);
                    if i > 0 && sys.delays[i] > 0.0 {
                        g += &sys.a[i];
                    }
                    if let Some(gains) = gains {
                        g += sys.b.eval_side(t, side) * gains[i].matrix.eval_side(t, side);
                    }
                    g
                })
                .collect()
        };
        let nodes = if varies { grid.node_count() } else { 1 };
        let g_left = map_indices(exec, nodes, |l| eval(grid.time(l), Side::Left));
        let g_right = map_indices(exec, nodes, |l| eval(grid.time(l), Side::Right));
        let (v_left, v_right) = match &prob.ctrl {
            ControlInput::OpenLoop { u } => {
                let f = |l: usize, side: Side| {
                    let t = grid.time(l);
                    (sys.b.eval_side(t, side) * u.eval_side(t, side))
                        .column(0)
                        .into_owned()
                };
                (
                    map_indices(exec, grid.node_count(), |l| f(l, Side::Left)),
                    map_indices(exec, grid.node_count(), |l| f(l, Side::Right)),
                )
            }
            _ => (Vec::new(), Vec::new()),
        };
        Ok(Self {
            n,
            lag,
            g_left,
            g_right,
            v_left,
            v_right,
        })
    }

    fn g(&self, l: usize, side: Side) -> &[DMatrix<f64>] {
        let table = match side {
            Side::Left => &self.g_left,
            Side::Right => &self.g_right,
        };
        &table[if table.len() == 1 { 0 } else { l }]
    }

    /// Sum of G_i over the zero-delay terms at node l.
    fn implicit(&self, l: usize, side: Side) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.n, self.n);
        for (g, &d) in self.g(l, side).iter().zip(&self.lag) {
            if d == 0 {
                acc += g;
            }
        }
        acc
    }

    /// f at node l from one side, with x(t_l) itself taken from `current`.
    fn forcing<X>(&self, l: usize, side: Side, x: &X, current: &DVector<f64>) -> DVector<f64>
    where
        X: Fn(isize, Side) -> DVector<f64>,
    {
        let mut f = DVector::zeros(self.n);
        for (g, &d) in self.g(l, side).iter().zip(&self.lag) {
            if d == 0 {
                f += g * current;
            } else {
                f += g * x(l as isize - d as isize, side);
            }
        }
        let v = match side {
            Side::Left => &self.v_left,
            Side::Right => &self.v_right,
        };
        if let Some(v) = v.get(l) {
            f += v;
        }
        f
    }
}

/// Product-integration weights: the panel at distance j from t_ℓ contributes
/// `near[j]`·f(t_{ℓ-j+1}⁻) + `far[j]`·f(t_{ℓ-j}⁺). Flattened column-major.
struct Weights {
    n: usize,
    near: Vec<f64>,
    far: Vec<f64>,
    /// Σ_j Φ_αj(t_ℓ) x_{j0}
    free: Vec<DVector<f64>>,
}

impl Weights {
    fn build(
        kernels: &Kernels,
        x0: &[DVector<f64>],
        grid: &SimulationGrid,
        cfg: &MlEvalConfig,
    ) -> Result<Self> {
        let n = kernels.dim();
        let nn = n * n;
        let h = grid.step();
        let count = grid.node_count();
        let prim = try_map_indices(cfg.exec, count, |j| {
            let t = grid.time(j);
            Ok::<_, Error>((kernels.psi1(t, cfg)?, kernels.psi2(t, cfg)?))
        })?;
        let mut near = vec![0.0; count * nn];
        let mut far = vec![0.0; count * nn];
        for j in 1..count {
            let (p_prev, q_prev) = &prim[j - 1];
            let (p, q) = &prim[j];
            let dq = (q - q_prev) / h;
            let wn = &dq - p_prev;
            let wf = p - &dq;
            near[j * nn..(j + 1) * nn].copy_from_slice(wn.as_slice());
            far[j * nn..(j + 1) * nn].copy_from_slice(wf.as_slice());
        }
        let free = try_map_indices(cfg.exec, count, |l| {
            let t = grid.time(l);
            let mut acc = DVector::zeros(n);
            for (j, xj) in x0.iter().enumerate() {
                acc += kernels.phi_j(j, t, cfg)? * xj;
            }
            Ok::<_, Error>(acc)
        })?;
        Ok(Self { n, near, far, free })
    }

    fn near(&self, j: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.near[j * nn..(j + 1) * nn]
    }

    fn far(&self, j: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.far[j * nn..(j + 1) * nn]
    }

    fn near_matrix(&self, j: usize) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n, self.n, self.near(j))
    }

    /// Σ over panels fully determined by the forcing at nodes < ℓ.
    fn history(&self, l: usize, fl: &[f64], fr: &[f64], exec: Execution) -> DVector<f64> {
        let n = self.n;
        let acc = sum_vectors(exec, l, n, |m, acc| {
            matvec_add(self.far(l - m), &fr[m * n..(m + 1) * n], acc);
            if m >= 1 {
                matvec_add(self.near(l - m + 1), &fl[m * n..(m + 1) * n], acc);
            }
        });
        DVector::from_vec(acc) + &self.free[l]
    }
}

fn matvec_add(w: &[f64], v: &[f64], acc: &mut [f64]) {
    let n = v.len();
    for (c, &vc) in v.iter().enumerate() {
        if vc != 0.0 {
            for (r, a) in acc.iter_mut().enumerate() {
                *a += w[r + c * n] * vc;
            }
        }
    }
}

/// Kernel generator A₀ + Σ of the A_i whose delay is zero.
fn generator(prob: &ValidatedProblem) -> DMatrix<f64> {
    let sys = &prob.sys;
    let mut a = sys.a0().clone();
    for i in 1..sys.a.len() {
        if sys.delays[i] == 0.0 {
            a += &sys.a[i];
        }
    }
    a
}

/// x at node index `idx` (negative: prehistory) seen from one side.
fn delayed(
    states: &[DVector<f64>],
    pre: &InitialConditionSet,
    step: f64,
    idx: isize,
    side: Side,
) -> DVector<f64> {
    if idx > 0 || (idx == 0 && side == Side::Right) {
        states[idx as usize].clone()
    } else {
        pre.combined(idx as f64 * step, side)
    }
}

fn check_grid(prob: &ValidatedProblem, grid: &SimulationGrid) -> Result<()> {
    if grid.steps_in(prob.sys.h()).is_none() {
        return Err(Error::InvalidArgument(
            "grid step does not divide the delays; build it with SimulationGrid::aligned".into(),
        ));
    }
    Ok(())
}

/// Marches the Volterra equation node by node. The dependence of x(t_ℓ) on
/// itself through the zero-delay terms is resolved by fixed-point sweeps.
pub fn solve_trajectory(
    prob: &ValidatedProblem,
    grid: &SimulationGrid,
    cfg: &MlEvalConfig,
) -> Result<Trajectory> {
    check_grid(prob, grid)?;
    let n = prob.n();
    let kernels = Kernels::new(prob.sys.alpha, &generator(prob), cfg)?;
    let coef = Coefficients::build(prob, grid, cfg.exec)?;
    let w = Weights::build(&kernels, &prob.ics.x0, grid, cfg)?;
    let count = grid.node_count();
    let pre = &prob.ics;
    let step = grid.step();

    let mut states: Vec<DVector<f64>> = Vec::with_capacity(count);
    let mut fl = vec![0.0; count * n];
    let mut fr = vec![0.0; count * n];
    let w1 = w.near_matrix(1);

    states.push(w.free[0].clone());
    {
        let x = |idx: isize, side: Side| delayed(&states, pre, step, idx, side);
        let f0 = coef.forcing(0, Side::Right, &x, &states[0]);
        fr[..n].copy_from_slice(f0.as_slice());
    }
    for l in 1..count {
        let base = w.history(l, &fl, &fr, cfg.exec);
        let implicit = &w1 * coef.implicit(l, Side::Left);
        let x = |idx: isize, side: Side| delayed(&states, pre, step, idx, side);
        let zero = DVector::zeros(n);
        let explicit = &base + &w1 * coef.forcing(l, Side::Left, &x, &zero);
        let mut cur = states[l - 1].clone();
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let next = &explicit + &implicit * &cur;
            let diff = (&next - &cur).amax();
            cur = next;
            if diff <= SWEEP_TOL * cur.amax().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::NodeCorrectionDiverged(grid.time(l)));
        }
        states.push(cur);
        let x = |idx: isize, side: Side| delayed(&states, pre, step, idx, side);
        let left = coef.forcing(l, Side::Left, &x, &states[l]);
        let right = coef.forcing(l, Side::Right, &x, &states[l]);
        fl[l * n..(l + 1) * n].copy_from_slice(left.as_slice());
        fr[l * n..(l + 1) * n].copy_from_slice(right.as_slice());
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        prehistory: prob.ics.clone(),
    })
}

/// One application of the Picard operator: the right-hand side of the
/// Volterra equation evaluated with `traj` in place of the unknown.
pub fn picard_map(
    prob: &ValidatedProblem,
    traj: &Trajectory,
    grid: &SimulationGrid,
    cfg: &MlEvalConfig,
) -> Result<Trajectory> {
    check_grid(prob, grid)?;
    if traj.grid != *grid || traj.dim() != prob.n() {
        return Err(Error::DimensionMismatch(
            "trajectory does not live on this grid".into(),
        ));
    }
    let n = prob.n();
    let kernels = Kernels::new(prob.sys.alpha, &generator(prob), cfg)?;
    let coef = Coefficients::build(prob, grid, cfg.exec)?;
    let w = Weights::build(&kernels, &prob.ics.x0, grid, cfg)?;
    let count = grid.node_count();
    let step = grid.step();
    let x = |idx: isize, side: Side| delayed(&traj.states, &traj.prehistory, step, idx, side);
    let forcing = map_indices(cfg.exec, count, |l| {
        (
            coef.forcing(l, Side::Left, &x, &traj.states[l]),
            coef.forcing(l, Side::Right, &x, &traj.states[l]),
        )
    });
    let mut fl = vec![0.0; count * n];
    let mut fr = vec![0.0; count * n];
    for (l, (a, b)) in forcing.iter().enumerate() {
        fl[l * n..(l + 1) * n].copy_from_slice(a.as_slice());
        fr[l * n..(l + 1) * n].copy_from_slice(b.as_slice());
    }
    let w1 = w.near_matrix(1);
    let states = map_indices(cfg.exec, count, |l| {
        if l == 0 {
            return w.free[0].clone();
        }
        w.history(l, &fl, &fr, Execution::Sequential) + &w1 * &forcing[l].0
    });
    Ok(Trajectory {
        grid: *grid,
        states,
        prehistory: traj.prehistory.clone(),
    })
}

/// Trajectory of the delay-free form, whose kernels are generated by
/// Σ_i A_i.
pub fn solve_delay_free(
    prob: &ValidatedProblem,
    grid: &SimulationGrid,
    cfg: &MlEvalConfig,
) -> Result<Trajectory> {
    if !prob.sys.is_delay_free() {
        return Err(Error::DelaysNotZero);
    }
    solve_trajectory(prob, grid, cfg)
}

/// Fractional Adams-Bashforth-Moulton predictor-corrector applied to the
/// Caputo equation itself, with x(t) = Σ_j x_{j0} t^j / j! + I^α F.
/// Delayed values off the grid are interpolated linearly. Meant as an
/// independent cross-check of [`solve_trajectory`].
pub fn solve_oracle(prob: &ValidatedProblem, grid: &SimulationGrid) -> Result<Trajectory> {
    let sys = &prob.sys;
    let n = prob.n();
    let alpha = sys.alpha;
    let h = grid.step();
    let count = grid.node_count();
    if sys
        .delays
        .iter()
        .any(|&r| r > 0.0 && r < h * (1.0 - ALIGN_TOL))
    {
        return Err(Error::InvalidArgument(
            "every positive delay must span a step".into(),
        ));
    }
    let pre = &prob.ics;
    let taylor = |t: f64| {
        let mut acc = DVector::zeros(n);
        let mut fact = 1.0;
        for (j, xj) in pre.x0.iter().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            acc += xj * (t.powi(j as i32) / fact);
        }
        acc
    };
    let gains = match &prob.ctrl {
        ControlInput::Feedback { gains } => Some(gains),
        _ => None,
    };
    let matrices = |t: f64| -> Vec<DMatrix<f64>> {
        (0..sys.delays.len())
            .map(|i| {
                let mut g = &sys.a[i] + sys.a_tilde[i].eval(t);
                if let Some(gains) = gains {
                    g += sys.b.eval(t) * gains[i].matrix.eval(t);
                }
                g
            })
            .collect()
    };
    let open_loop = |t: f64| match &prob.ctrl {
        ControlInput::OpenLoop { u } => Some((sys.b.eval(t) * u.eval(t)).column(0).into_owned()),
        _ => None,
    };
    let value = |states: &[DVector<f64>], s: f64, own: &DVector<f64>, l: usize| {
        if s < 0.0 {
            return pre.combined(s, Side::Right);
        }
        let pos = s / h;
        let near = pos.round();
        if (pos - near).abs() <= ALIGN_TOL {
            let i = near as usize;
            return if i == l {
                own.clone()
            } else {
                states[i].clone()
            };
        }
        let i = pos.floor() as usize;
        let w = pos - i as f64;
        &states[i] * (1.0 - w) + &states[i + 1] * w
    };
    let rhs = |states: &[DVector<f64>], l: usize, own: &DVector<f64>| {
        let t = grid.time(l);
        let mut f = DVector::zeros(n);
        for (g, &r) in matrices(t).iter().zip(&sys.delays) {
            f += g * value(states, t - r, own, l);
        }
        if let Some(v) = open_loop(t) {
            f += v;
        }
        f
    };

    let g1 = gamma_fn(alpha + 1.0)?;
    let g2 = gamma_fn(alpha + 2.0)?;
    let ha = h.powf(alpha);
    let mut states = vec![taylor(0.0)];
    let mut forcing = vec![rhs(&states, 0, &states[0].clone())];
    for l in 0..count - 1 {
        let t_next = grid.time(l + 1);
        let lf = l as f64;
        let mut pred = taylor(t_next);
        for (m, fm) in forcing.iter().enumerate() {
            let d = (l - m) as f64;
            let b = ((d + 1.0).powf(alpha) - d.powf(alpha)) * ha / g1;
            pred += fm * b;
        }
        let mut corr = taylor(t_next);
        for (m, fm) in forcing.iter().enumerate() {
            let a = if m == 0 {
                lf.powf(alpha + 1.0) - (lf - alpha) * (lf + 1.0).powf(alpha)
            } else {
                let d = (l - m) as f64;
                (d + 2.0).powf(alpha + 1.0) + d.powf(alpha + 1.0)
                    - 2.0 * (d + 1.0).powf(alpha + 1.0)
            };
            corr += fm * (a * ha / g2);
        }
        let f_pred = rhs(&states, l + 1, &pred);
        corr += f_pred * (ha / g2);
        if corr.iter().any(|v| !v.is_finite()) {
            return Err(Error::NodeCorrectionDiverged(t_next));
        }
        states.push(corr.clone());
        let f_next = rhs(&states, l + 1, &corr);
        forcing.push(f_next);
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        prehistory: prob.ics.clone(),
    })
}

/// Convenience for tests and the CLI: an open-loop or autonomous problem's
/// trajectory, picking the delay-free route when all delays vanish.
pub fn simulate(
    prob: &ValidatedProblem,
    step: f64,
    horizon: f64,
    cfg: &MlEvalConfig,
) -> Result<Trajectory> {
    let grid = SimulationGrid::aligned(step, horizon, &prob.sys.delays)?;
    if prob.sys.is_delay_free() {
        solve_delay_free(prob, &grid, cfg)
    } else {
        solve_trajectory(prob, &grid, cfg)
    }
}

/// `MatrixFunction` of a constant column vector, for building prehistories.
pub fn constant_history(v: &DVector<f64>) -> MatrixFunction {
    MatrixFunction::Constant(DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_system, FractionalDelaySystem};
    use crate::special::ml_real;
    use nalgebra::dmatrix;

    fn scalar(alpha: f64, delays: Vec<f64>, a: Vec<f64>, x0: f64) -> ValidatedProblem {
        let sys = FractionalDelaySystem::constant(
            alpha,
            delays,
            a.into_iter().map(|v| dmatrix![v]).collect(),
        );
        let k = sys.k();
        let mut xs = vec![DVector::from_element(1, x0)];
        xs.resize(k, DVector::zeros(1));
        validate_system(sys, InitialConditionSet::constant(xs), ControlInput::None).unwrap()
    }

    #[test]
    fn aligned_grid_divides_every_delay() {
        let g = SimulationGrid::aligned(0.3, 5.0, &[0.0, 1.0, 2.5]).unwrap();
        assert!((g.step() - 0.25).abs() < 1e-15);
        assert_eq!(g.steps_in(2.5), Some(10));
        assert_eq!(g.node_count(), 21);
        assert!(SimulationGrid::aligned(0.1, 1.0, &[0.0, 1.0, 2f64.sqrt()]).is_err());
    }

    #[test]
    fn exponential_decay() {
        let p = scalar(1.0, vec![0.0], vec![-1.0], 1.0);
        let g = SimulationGrid::new(1e-3, 1.0).unwrap();
        let tr = solve_trajectory(&p, &g, &MlEvalConfig::default()).unwrap();
        let x1 = tr.final_state()[0];
        assert!(((x1 - (-1f64).exp()) / (-1f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn method_of_steps() {
        // x' = -x(t - 1), φ ≡ 1: x = 1 - t on [0, 1]
        let p = scalar(1.0, vec![0.0, 1.0], vec![0.0, -1.0], 1.0);
        let g = SimulationGrid::aligned(1e-2, 1.0, &p.sys.delays).unwrap();
        let tr = solve_trajectory(&p, &g, &MlEvalConfig::default()).unwrap();
        assert!(tr.final_state()[0].abs() < 1e-12);
        assert!((tr.value_at(0.5)[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn half_order_relaxation() {
        let p = scalar(0.5, vec![0.0], vec![-1.0], 1.0);
        let g = SimulationGrid::new(1e-2, 1.0).unwrap();
        let cfg = MlEvalConfig::default();
        let tr = solve_trajectory(&p, &g, &cfg).unwrap();
        let want = ml_real(0.5, 1.0, -1.0, &cfg).unwrap();
        assert!((tr.final_state()[0] - want).abs() < 1e-12);
    }

    #[test]
    fn zero_picard_image_for_zero_system() {
        let p = scalar(0.6, vec![0.0], vec![0.0], 2.0);
        let g = SimulationGrid::new(0.05, 1.0).unwrap();
        let z = Trajectory::zeros(g, 1, p.ics.clone());
        let img = picard_map(&p, &z, &g, &MlEvalConfig::default()).unwrap();
        assert!(img.states.iter().all(|x| (x[0] - 2.0).abs() < 1e-14));
    }

    #[test]
    fn delay_free_needs_zero_delays() {
        let p = scalar(1.0, vec![0.0, 1.0], vec![-1.0, 0.2], 1.0);
        let g = SimulationGrid::new(0.1, 1.0).unwrap();
        assert_eq!(
            solve_delay_free(&p, &g, &MlEvalConfig::default()).unwrap_err(),
            Error::DelaysNotZero
        );
    }

    #[test]
    fn oracle_exponential() {
        let p = scalar(1.0, vec![0.0], vec![-1.0], 1.0);
        let g = SimulationGrid::new(1e-3, 1.0).unwrap();
        let tr = solve_oracle(&p, &g).unwrap();
        assert!((tr.final_state()[0] - (-1f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn csv_layout() {
        let p = scalar(1.0, vec![0.0], vec![0.0], 1.0);
        let g = SimulationGrid::new(0.5, 1.0).unwrap();
        let tr = solve_trajectory(&p, &g, &MlEvalConfig::default()).unwrap();
        let csv = tr.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x1");
        assert_eq!(lines[2], "5.00000000000000e-1,1.00000000000000e0");
        assert_eq!(lines.len(), 4);
    }
}
