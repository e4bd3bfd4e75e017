//! Fundamental matrices Φ_αj(t) = t^j E_{α,j+1}(A t^α) and
//! Φ_α(t) = t^{α-1} E_{α,α}(A t^α), their primitives and kernel norms.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::mittag_leffler::{ml_real, MatrixMittagLeffler, MlEvalConfig};
use super::quadrature::{gauss_legendre, gl_composite, graded_product};
use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::model::{derivative_count, FractionalDelaySystem};

/// Largest split point tried when integrating Φ_α over the half line.
const MAX_SPLIT: f64 = 1e40;

/// Kernel evaluator for a fixed order α and generator matrix A.
#[derive(Debug, Clone)]
pub struct Kernels {
    alpha: f64,
    k: usize,
    ml: MatrixMittagLeffler,
}

impl Kernels {
    pub fn new(alpha: f64, a: &DMatrix<f64>, cfg: &MlEvalConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            alpha,
            k: derivative_count(alpha),
            ml: MatrixMittagLeffler::new(alpha, a, cfg)?,
        })
    }

    /// Kernels generated by A₀ of `sys`.
    pub fn for_system(sys: &FractionalDelaySystem, cfg: &MlEvalConfig) -> Result<Self> {
        Self::new(sys.alpha, sys.a0(), cfg)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.ml.dim()
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        self.ml.matrix()
    }

    /// E_{α,β}(A t^α).
    pub fn ml(&self, beta: f64, t: f64, cfg: &MlEvalConfig) -> Result<DMatrix<f64>> {
        self.ml.eval(beta, t, cfg)
    }

    /// Φ_αj(t); zero for t < 0, and exactly I/0 at t = 0 for j = 0 / j ≥ 1.
    pub fn phi_j(&self, j: usize, t: f64, cfg: &MlEvalConfig) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if t < 0.0 {
            return Ok(DMatrix::zeros(n, n));
        }
        if t == 0.0 {
            return Ok(if j == 0 {
                DMatrix::identity(n, n)
            } else {
                DMatrix::zeros(n, n)
            });
        }
        Ok(self.ml.eval(j as f64 + 1.0, t, cfg)? * t.powi(j as i32))
    }

    /// Σ_j Φ_αj(t) over j < k.
    pub fn phi_sum(&self, t: f64, cfg: &MlEvalConfig) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut acc = DMatrix::zeros(n, n);
        for j in 0..self.k {
            acc += self.phi_j(j, t, cfg)?;
        }
        Ok(acc)
    }

    /// Φ_α(t); zero for t < 0.
    pub fn phi(&self, t: f64, cfg: &MlEvalConfig) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if t < 0.0 {
            return Ok(DMatrix::zeros(n, n));
        }
        if t == 0.0 {
            return if self.alpha < 1.0 {
                Err(Error::SingularAtZero)
            } else if self.alpha == 1.0 {
                Ok(DMatrix::identity(n, n))
            } else {
                Ok(DMatrix::zeros(n, n))
            };
        }
        Ok(self.ml.eval(self.alpha, t, cfg)? * t.powf(self.alpha - 1.0))
    }

    /// Ψ₁(t) = ∫_0^t Φ_α(s) ds = t^α E_{α,α+1}(A t^α).
    pub fn psi1(&self, t: f64, cfg: &MlEvalConfig) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if t <= 0.0 {
            return Ok(DMatrix::zeros(n, n));
        }
        Ok(self.ml.eval(self.alpha + 1.0, t, cfg)? * t.powf(self.alpha))
    }

    /// Ψ₂(t) = ∫_0^t Ψ₁(s) ds = t^{α+1} E_{α,α+2}(A t^α).
    pub fn psi2(&self, t: f64, cfg: &MlEvalConfig) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if t <= 0.0 {
            return Ok(DMatrix::zeros(n, n));
        }
        Ok(self.ml.eval(self.alpha + 2.0, t, cfg)? * t.powf(self.alpha + 1.0))
    }

    /// ∫_0^δ ‖Φ_α(s)‖₂ ds; δ = ∞ is allowed when Φ_α is integrable.
    pub fn l1(&self, delta: f64, cfg: &MlEvalConfig) -> Result<f64> {
        if !(delta >= 0.0) {
            return Err(Error::InvalidArgument("delta must be nonnegative".into()));
        }
        if delta == 0.0 {
            return Ok(0.0);
        }
        if let Some(v) = self.l1_monotone(delta, cfg)? {
            return Ok(v);
        }
        if delta.is_infinite() {
            return self.l1_half_line(cfg);
        }
        self.l1_finite(delta, cfg)
    }

    /// Closed form for symmetric A with spectrum in (-∞, 0] and α ≤ 1.
    /// There s^{α-1} E_{α,α}(λ s^α) is positive and decreasing in -λ, so
    /// ‖Φ_α(s)‖₂ is the scalar kernel of the largest eigenvalue and its
    /// integral is the primitive δ^α E_{α,α+1}(λ_max δ^α).
    fn l1_monotone(&self, delta: f64, cfg: &MlEvalConfig) -> Result<Option<f64>> {
        let a = self.generator();
        if self.alpha > 1.0 || (a - a.transpose()).amax() > 1e-14 * a.amax() {
            return Ok(None);
        }
        let top = a.clone().symmetric_eigenvalues().max();
        if top > 0.0 {
            return Ok(None);
        }
        if delta.is_infinite() {
            return Ok((top < 0.0).then(|| 1.0 / top.abs()));
        }
        let x = top * delta.powf(self.alpha);
        Ok(Some(
            delta.powf(self.alpha) * ml_real(self.alpha, self.alpha + 1.0, x, cfg)?,
        ))
    }

    fn l1_finite(&self, delta: f64, cfg: &MlEvalConfig) -> Result<f64> {
        let a = self.alpha;
        graded_product(
            a,
            delta,
            a - 1.0,
            |s| Ok(norm2(&self.ml.eval(a, s, cfg)?)),
            cfg.quad_tol,
            cfg.exec,
        )
    }

    /// (∫_0^δ ‖Φ_α(s)‖₂² ds)^{1/2}; infinite when α ≤ 1/2 because the
    /// singular factor s^{2α-2} is not integrable.
    pub fn l2(&self, delta: f64, cfg: &MlEvalConfig) -> Result<f64> {
        if !(delta >= 0.0) || delta.is_infinite() {
            return Err(Error::InvalidArgument(
                "delta must be finite and nonnegative".into(),
            ));
        }
        if delta == 0.0 {
            return Ok(0.0);
        }
        if self.alpha <= 0.5 {
            return Ok(f64::INFINITY);
        }
        let a = self.alpha;
        let sq = graded_product(
            a,
            delta,
            2.0 * a - 2.0,
            |s| Ok(norm2(&self.ml.eval(a, s, cfg)?).powi(2)),
            cfg.quad_tol,
            cfg.exec,
        )?;
        Ok(sq.sqrt())
    }

    /// Checks that every eigenvalue λ of A satisfies |arg λ| > απ/2, the
    /// condition for Φ_α to be integrable on [0, ∞).
    pub fn check_integrable(&self) -> Result<()> {
        let a = self.alpha;
        if a >= 2.0 {
            return Err(Error::KernelNotIntegrable(format!(
                "order {a} has no decaying kernel"
            )));
        }
        for lambda in self.generator().clone().complex_eigenvalues().iter() {
            if lambda.norm() == 0.0 || lambda.arg().abs() <= a * PI / 2.0 {
                return Err(Error::KernelNotIntegrable(format!(
                    "eigenvalue {lambda} violates |arg| > {a}·π/2"
                )));
            }
        }
        Ok(())
    }

    fn l1_half_line(&self, cfg: &MlEvalConfig) -> Result<f64> {
        self.check_integrable()?;
        let a = self.alpha;
        let eigs = self.generator().clone().complex_eigenvalues();
        let min_abs = eigs.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let decay = -eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let mut split = 4.0 * min_abs.recip().powf(1.0 / a);
        let mut total = self.l1_finite(split, cfg)?;
        let rule = gauss_legendre(20);
        let tail_at = |s: f64| -> Result<f64> {
            let p = norm2(&self.phi(s, cfg)?);
            Ok(if a == 1.0 { p / decay } else { p * s / a })
        };
        loop {
            let piece = gl_composite(
                split,
                2.0 * split,
                8,
                &rule,
                |s| Ok(norm2(&self.phi(s, cfg)?)),
                cfg.exec,
            )?;
            total += piece;
            split *= 2.0;
            let tail = tail_at(split)?;
            if piece <= cfg.quad_tol * total && tail <= cfg.quad_tol * total {
                return Ok(total + tail);
            }
            if split >= MAX_SPLIT {
                if tail <= 1e-6 * total {
                    return Ok(total + tail);
                }
                return Err(Error::QuadratureNotConverged(tail));
            }
        }
    }
}

fn kernels_checked(sys: &FractionalDelaySystem, cfg: &MlEvalConfig) -> Result<Kernels> {
    if !(sys.alpha > 0.0) {
        return Err(Error::NonPositiveOrder(sys.alpha));
    }
    if sys.a.is_empty() {
        return Err(Error::DimensionMismatch("system has no A_0".into()));
    }
    Kernels::for_system(sys, cfg)
}

/// Φ_αj(t) for the system's A₀.
pub fn phi_alpha_j(
    sys: &FractionalDelaySystem,
    j: usize,
    t: f64,
    cfg: &MlEvalConfig,
) -> Result<DMatrix<f64>> {
    let k = kernels_checked(sys, cfg)?;
    if j >= k.k() {
        return Err(Error::InvalidArgument(format!(
            "index j = {j} must be below k = {}",
            k.k()
        )));
    }
    k.phi_j(j, t, cfg)
}

/// Φ_α(t) for the system's A₀.
pub fn phi_alpha(sys: &FractionalDelaySystem, t: f64, cfg: &MlEvalConfig) -> Result<DMatrix<f64>> {
    kernels_checked(sys, cfg)?.phi(t, cfg)
}

/// ∫_0^δ ‖Φ_α(s)‖₂ ds for the system's A₀ (δ may be infinite).
pub fn phi_alpha_l1(sys: &FractionalDelaySystem, delta: f64, cfg: &MlEvalConfig) -> Result<f64> {
    kernels_checked(sys, cfg)?.l1(delta, cfg)
}

/// (∫_0^δ ‖Φ_α(s)‖₂² ds)^{1/2} for the system's A₀.
pub fn phi_alpha_l2(sys: &FractionalDelaySystem, delta: f64, cfg: &MlEvalConfig) -> Result<f64> {
    kernels_checked(sys, cfg)?.l2(delta, cfg)
}
