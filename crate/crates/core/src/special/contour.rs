//! E_{α,β}(z) as the inverse Laplace transform of s^{α-β}/(s^α - z) at t = 1,
//! evaluated by the trapezoidal rule on a parabolic contour
//! s(u) = μ(1 + iu)² whose parameters balance discretisation and round-off
//! error (Garrappa's optimal parabolic contour). Poles of the transform
//! lying to the right of the chosen contour are added back as residues.

use std::f64::consts::PI;

use num_complex::Complex64;

const LOG_EPS: f64 = -36.043_653_389_117_15;
const MAX_NODES: f64 = 200.0;

#[derive(Debug, Clone, Copy)]
struct Params {
    mu: f64,
    h: f64,
    n: f64,
}

const INADMISSIBLE: Params = Params {
    mu: 0.0,
    h: 0.0,
    n: f64::INFINITY,
};

/// Contour between two singularities with "distances" φ_j < φ_{j+1}.
fn optimal_bounded(phi_j: f64, phi_j1: f64, pj: f64, qj: f64, log_tol: f64) -> Params {
    let fac = 1.01;
    let f_max = (log_tol - LOG_EPS).exp();
    let sq_j = phi_j.sqrt();
    let threshold = 2.0 * (log_tol - LOG_EPS).sqrt();
    let sq_j1 = phi_j1.sqrt().min(threshold - sq_j);

    let (sqbar_j, sqbar_j1, f_bar) = if pj < 1e-14 && qj < 1e-14 {
        (sq_j, sq_j1, 1.0)
    } else if pj < 1e-14 {
        let f_min = if sq_j > 0.0 {
            fac * (sq_j / (sq_j1 - sq_j)).powf(qj)
        } else {
            fac
        };
        if f_min >= f_max {
            return INADMISSIBLE;
        }
        let f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fq = f_bar.powf(-1.0 / qj);
        (sq_j, (2.0 * sq_j1 - fq * sq_j) / (2.0 + fq), f_bar)
    } else if qj < 1e-14 {
        let f_min = fac * (sq_j1 / (sq_j1 - sq_j)).powf(pj);
        if f_min >= f_max {
            return INADMISSIBLE;
        }
        let f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fp = f_bar.powf(-1.0 / pj);
        ((2.0 * sq_j + fp * sq_j1) / (2.0 - fp), sq_j1, f_bar)
    } else {
        let mut f_min = fac * (sq_j + sq_j1) / (sq_j1 - sq_j).powf(pj.max(qj));
        if f_min >= f_max {
            return INADMISSIBLE;
        }
        f_min = f_min.max(1.5);
        let f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fp = f_bar.powf(-1.0 / pj);
        let fq = f_bar.powf(-1.0 / qj);
        let w = -phi_j1 / log_tol;
        let den = 2.0 + w - (1.0 + w) * fp + fq;
        (
            ((2.0 + w + fq) * sq_j + fp * sq_j1) / den,
            (-(1.0 + w) * fq * sq_j + (2.0 + w - (1.0 + w) * fp) * sq_j1) / den,
            f_bar,
        )
    };
    let log_tol = log_tol - f_bar.ln();
    let w = -sqbar_j1 * sqbar_j1 / log_tol;
    let mu = (((1.0 + w) * sqbar_j + sqbar_j1) / (2.0 + w)).powi(2);
    let h = -2.0 * PI / log_tol * (sqbar_j1 - sqbar_j) / ((1.0 + w) * sqbar_j + sqbar_j1);
    let n = ((1.0 - log_tol / mu).sqrt() / h).ceil();
    if !(mu > 0.0 && h > 0.0 && n.is_finite()) {
        return INADMISSIBLE;
    }
    Params { mu, h, n }
}

/// Contour to the right of the last singularity.
fn optimal_unbounded(phi_j: f64, pj: f64, log_tol: f64) -> Params {
    let sq_phi = phi_j.sqrt();
    let mut phibar = if phi_j > 0.0 { phi_j * 1.01 } else { 0.01 };
    let mut sq_phibar = phibar.sqrt();
    let (f_min, f_max, f_tar) = (1.0, 10.0, 5.0f64);
    let (mut n, mut a, mut sq_mu);
    let mut guard = 0;
    loop {
        let log_eps_phi = log_tol / phibar;
        n = (phibar / PI * (1.0 - 1.5 * log_eps_phi + (1.0 - 2.0 * log_eps_phi).sqrt())).ceil();
        a = PI * n / phibar;
        sq_mu = sq_phibar * (4.0 - a).abs() / (7.0 - (1.0 + 12.0 * a).sqrt()).abs();
        let fbar = ((sq_phibar - sq_phi) / sq_mu).powf(-pj);
        guard += 1;
        if pj < 1e-14 || (f_min < fbar && fbar < f_max) || guard > 100 {
            break;
        }
        sq_phibar = f_tar.powf(-1.0 / pj) * sq_mu + sq_phi;
        phibar = sq_phibar * sq_phibar;
    }
    let mut mu = sq_mu * sq_mu;
    let mut h = (-3.0 * a - 2.0 + 2.0 * (1.0 + 12.0 * a).sqrt()) / (4.0 - a) / n;
    let threshold = log_tol - LOG_EPS;
    if mu > threshold {
        let q = if pj.abs() < 1e-14 {
            0.0
        } else {
            f_tar.powf(-1.0 / pj) * mu.sqrt()
        };
        let phibar = (q + phi_j.sqrt()).powi(2);
        if phibar < threshold {
            let w = (LOG_EPS / (LOG_EPS - log_tol)).sqrt();
            let u = (-phibar / LOG_EPS).sqrt();
            mu = threshold;
            n = (w * log_tol / 2.0 / PI / (u * w - 1.0)).ceil();
            h = (LOG_EPS / (LOG_EPS - log_tol)).sqrt() / n;
        } else {
            return INADMISSIBLE;
        }
    }
    if !(mu > 0.0 && h > 0.0 && n.is_finite() && n > 0.0) {
        return INADMISSIBLE;
    }
    Params { mu, h, n }
}

/// E_{α,β}(z) by Laplace-transform inversion, for z ≠ 0.
pub(crate) fn ml_contour(alpha: f64, beta: f64, z: Complex64) -> Complex64 {
    let mut log_tol = (1e-15f64).ln();
    let theta = z.arg();
    let kmin = (-alpha / 2.0 - theta / (2.0 * PI)).ceil() as i64;
    let kmax = (alpha / 2.0 - theta / (2.0 * PI)).floor() as i64;
    let rho = z.norm().powf(1.0 / alpha);
    let mut poles: Vec<(f64, Complex64)> = (kmin..=kmax)
        .map(|k| {
            let s = Complex64::from_polar(rho, (theta + 2.0 * PI * k as f64) / alpha);
            ((s.re + s.norm()) / 2.0, s)
        })
        .filter(|(phi, _)| *phi > 1e-15)
        .collect();
    poles.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

    // singularities: the branch point at 0 followed by the poles
    let mut sing = vec![Complex64::new(0.0, 0.0)];
    let mut phi = vec![0.0];
    for (ph, s) in &poles {
        sing.push(*s);
        phi.push(*ph);
    }
    let j1 = sing.len();
    let mut p = vec![1.0; j1];
    p[0] = (-2.0 * (alpha - beta + 1.0)).max(0.0);
    let mut q = vec![1.0; j1];
    q[j1 - 1] = f64::INFINITY;
    phi.push(f64::INFINITY);

    let (mut best, mut region);
    loop {
        let admissible: Vec<usize> = (0..j1)
            .filter(|&j| phi[j] < log_tol - LOG_EPS && phi[j] < phi[j + 1])
            .collect();
        best = INADMISSIBLE;
        region = 0;
        for &j in &admissible {
            let prm = if j + 1 < j1 {
                optimal_bounded(phi[j], phi[j + 1], p[j], q[j], log_tol)
            } else {
                optimal_unbounded(phi[j], p[j], log_tol)
            };
            if prm.n < best.n {
                best = prm;
                region = j;
            }
        }
        if best.n <= MAX_NODES || log_tol > -1.0 {
            break;
        }
        log_tol += 10f64.ln();
    }
    if !best.n.is_finite() {
        return Complex64::new(f64::NAN, f64::NAN);
    }

    let n = best.n as i64;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in -n..=n {
        let u = best.h * k as f64;
        let s = best.mu * Complex64::new(1.0, u).powi(2);
        let ds = Complex64::new(-2.0 * best.mu * u, 2.0 * best.mu);
        let f = s.powf(alpha - beta) / (s.powf(alpha) - z) * ds;
        sum += s.exp() * f;
    }
    let integral = sum * best.h / (2.0 * PI * Complex64::i());
    let residues: Complex64 = sing[region + 1..]
        .iter()
        .map(|s| s.powf(1.0 - beta) * s.exp() / alpha)
        .sum();
    let value = integral + residues;
    if z.im == 0.0 {
        Complex64::new(value.re, 0.0)
    } else {
        value
    }
}
