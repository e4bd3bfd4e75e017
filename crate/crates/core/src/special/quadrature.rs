//! Quadrature rules for the kernel integrals.

use crate::error::{Error, Result};
use crate::exec::{try_map_indices, Execution};

const START_PANELS: usize = 32;
const MAX_PANELS: usize = 1 << 17;

/// ∫_a^b s^q ℓ(s) ds for the linear interpolant ℓ of (a, ga), (b, gb).
pub(crate) fn weighted_linear_panel(a: f64, b: f64, q: f64, ga: f64, gb: f64) -> f64 {
    let i0 = (b.powf(q + 1.0) - a.powf(q + 1.0)) / (q + 1.0);
    let i1 = (b.powf(q + 2.0) - a.powf(q + 2.0)) / (q + 2.0);
    let wa = (b * i0 - i1) / (b - a);
    let wb = (i1 - a * i0) / (b - a);
    wa * ga + wb * gb
}

/// ∫_0^δ s^q g(s) ds with q > -1, by product integration on the graded mesh
/// s_i = δ (i/N)^{1/α}.
///
/// The kernel factors integrated here are smooth functions of u = s^α, and
/// the mesh is uniform in u, so g is interpolated linearly in u and the
/// transformed weight u^{(q+1)/α - 1}/α is integrated exactly. The panel
/// count doubles (reusing old nodes) until two successive Richardson
/// estimates agree to `tol` relative.
pub(crate) fn graded_product<G>(
    alpha: f64,
    delta: f64,
    q: f64,
    g: G,
    tol: f64,
    exec: Execution,
) -> Result<f64>
where
    G: Fn(f64) -> Result<f64> + Sync + Send,
{
    let top = delta.powf(alpha);
    let qu = (q + 1.0) / alpha - 1.0;
    let u = |i: usize, n: usize| top * i as f64 / n as f64;
    let node = |i: usize, n: usize| {
        if i == n {
            delta
        } else {
            delta * (i as f64 / n as f64).powf(1.0 / alpha)
        }
    };
    let mut n = START_PANELS;
    let mut values = try_map_indices(exec, n + 1, |i| g(node(i, n)))?;
    let mut prev_raw: Option<f64> = None;
    let mut prev_rich: Option<f64> = None;
    loop {
        let mut raw = 0.0;
        for i in 0..n {
            raw += weighted_linear_panel(u(i, n), u(i + 1, n), qu, values[i], values[i + 1]);
        }
        raw /= alpha;
        if let Some(pr) = prev_raw {
            let rich = raw + (raw - pr) / 3.0;
            if let Some(pe) = prev_rich {
                let diff = (rich - pe).abs();
                if diff <= tol * rich.abs().max(1e-300) {
                    return Ok(rich);
                }
                if 2 * n > MAX_PANELS {
                    return Err(Error::QuadratureNotConverged(diff));
                }
            }
            prev_rich = Some(rich);
        }
        prev_raw = Some(raw);
        let fresh = try_map_indices(exec, n, |i| g(node(2 * i + 1, 2 * n)))?;
        let mut merged = Vec::with_capacity(2 * n + 1);
        for i in 0..n {
            merged.push(values[i]);
            merged.push(fresh[i]);
        }
        merged.push(values[n]);
        values = merged;
        n *= 2;
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss-Legendre over `panels` equal panels of [a, b].
pub(crate) fn gl_composite<F>(
    a: f64,
    b: f64,
    panels: usize,
    rule: &(Vec<f64>, Vec<f64>),
    f: F,
    exec: Execution,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let m = rule.0.len();
    let h = (b - a) / panels as f64;
    let vals = try_map_indices(exec, panels * m, |idx| {
        let (p, k) = (idx / m, idx % m);
        let mid = a + (p as f64 + 0.5) * h;
        f(mid + 0.5 * h * rule.0[k]).map(|v| v * rule.1[k])
    })?;
    Ok(0.5 * h * vals.iter().sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let rule = gauss_legendre(10);
        let wsum: f64 = rule.1.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
        let v = gl_composite(0.0, 2.0, 1, &rule, |x| Ok(x.powi(7)), Execution::Sequential).unwrap();
        assert!((v - 32.0).abs() < 1e-12);
    }

    #[test]
    fn product_rule_is_exact_for_the_bare_weight() {
        // ∫_0^1 s^{-1/2} ds = 2
        let v = graded_product(0.5, 1.0, -0.5, |_| Ok(1.0), 1e-12, Execution::Sequential).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn product_rule_smooth_factor() {
        // ∫_0^1 s^{-0.3} e^{-s} ds
        let reference = 0.988_063_653_910_736_6;
        let v = graded_product(
            0.7,
            1.0,
            -0.3,
            |s| Ok((-s).exp()),
            1e-11,
            Execution::Sequential,
        )
        .unwrap();
        assert!((v - reference).abs() < 1e-9, "{v}");
    }
}
