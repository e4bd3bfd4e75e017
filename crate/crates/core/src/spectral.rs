//! Matrix norms and measures, a diagonalising decomposition of A₀, and the
//! delay-independent stability test built on the fractional power of its
//! spectrum.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::ser_f64;
use crate::linalg::{cond2_c, eigenpairs, induced_norm, norm2_c, to_complex, CMatrix, NormP};
use crate::model::FractionalDelaySystem;

/// Eigenvector condition number above which A₀ is treated as defective.
pub const DEFECTIVE_COND: f64 = 1e8;
/// Relative tolerance for a composite norm to count as equal to the bound.
pub const TIE_TOL: f64 = 1e-12;

const SEARCH_ITERS: usize = 50;
const SEARCH_TOL: f64 = 1e-10;

pub fn matrix_norm(m: &DMatrix<f64>, p: NormP) -> f64 {
    induced_norm(m, p)
}

/// Logarithmic norm μ_p(M).
pub fn matrix_measure(m: &DMatrix<f64>, p: NormP) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(
            "matrix measure needs a square matrix".into(),
        ));
    }
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let n = m.nrows();
    Ok(match p {
        NormP::Two => {
            let sym = (m + m.transpose()) * 0.5;
            sym.symmetric_eigenvalues().max()
        }
        NormP::One => (0..n)
            .map(|j| {
                m[(j, j)]
                    + (0..n)
                        .filter(|&i| i != j)
                        .map(|i| m[(i, j)].abs())
                        .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max),
        NormP::Inf => (0..n)
            .map(|i| {
                m[(i, i)]
                    + (0..n)
                        .filter(|&j| j != i)
                        .map(|j| m[(i, j)].abs())
                        .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max),
    })
}

/// ‖M‖_p ‖M⁻¹‖_p.
pub fn condition_number(m: &DMatrix<f64>, p: NormP) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(
            "condition number needs a square matrix".into(),
        ));
    }
    let sv = m.clone().svd(false, false).singular_values;
    let (max, min) = (sv.max(), sv.min());
    if !(min > f64::EPSILON * max * m.nrows() as f64) {
        return Err(Error::SingularMatrix);
    }
    if p == NormP::Two {
        return Ok(max / min);
    }
    let inv = m.clone().try_inverse().ok_or(Error::SingularMatrix)?;
    Ok(induced_norm(m, p) * induced_norm(&inv, p))
}

/// A₀ = T⁻¹ (J_d + J_off) T.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub t: CMatrix,
    pub t_inv: CMatrix,
    /// Diagonal of J.
    pub j_d: Vec<Complex64>,
    /// Off-diagonal part of J; zero in the diagonalisable case.
    pub j_off: CMatrix,
    pub cond_t: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.j_d.len()
    }

    /// ‖A₀ − T⁻¹ J T‖₂ for the matrix this was built from.
    pub fn residual(&self, a0: &DMatrix<f64>) -> f64 {
        let j = CMatrix::from_diagonal(&DVector::from_vec(self.j_d.clone())) + &self.j_off;
        norm2_c(&(&self.t_inv * j * &self.t - to_complex(a0)))
    }

    /// T⁻¹ M T.
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        &self.t_inv * m * &self.t
    }

    /// max Re λ over the diagonal of J, which is μ₂(J_d).
    pub fn measure_jd(&self) -> f64 {
        self.j_d
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Eigendecomposition of A₀ with T = V⁻¹ for unit eigenvectors V, or the
/// split of J = T A₀ T⁻¹ for a caller-supplied T.
pub fn decompose(a0: &DMatrix<f64>, t: Option<&DMatrix<f64>>) -> Result<SpectralDecomposition> {
    let n = a0.nrows();
    if n == 0 || a0.ncols() != n {
        return Err(Error::DimensionMismatch(
            "decomposition needs a nonempty square matrix".into(),
        ));
    }
    if let Some(t) = t {
        if t.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("T must be {n}x{n}")));
        }
        let t_inv = t.clone().try_inverse().ok_or(Error::SingularMatrix)?;
        let j = t * a0 * &t_inv;
        let j_d: Vec<Complex64> = (0..n).map(|i| Complex64::new(j[(i, i)], 0.0)).collect();
        let mut off = to_complex(&j);
        for i in 0..n {
            off[(i, i)] = Complex64::new(0.0, 0.0);
        }
        let tc = to_complex(t);
        return Ok(SpectralDecomposition {
            cond_t: cond2_c(&tc),
            t: tc,
            t_inv: to_complex(&t_inv),
            j_d,
            j_off: off,
        });
    }
    let e = eigenpairs(a0)?;
    if !(e.cond < DEFECTIVE_COND) {
        return Err(Error::DefectiveMatrixNoTransform);
    }
    Ok(SpectralDecomposition {
        t: e.inverse,
        t_inv: e.vectors,
        j_d: e.values,
        j_off: CMatrix::zeros(n, n),
        cond_t: e.cond,
    })
}

/// max_k Re λ_k^{1/α} with λ^{1/α} = |λ|^{1/α} e^{iθ/α}, θ the principal
/// argument in (−π, π] and θ/α used as is.
pub fn frac_power_measure(dec: &SpectralDecomposition, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveOrder(alpha));
    }
    let mut best = f64::NEG_INFINITY;
    for z in &dec.j_d {
        if z.norm() == 0.0 {
            return Err(Error::EigenvalueAtOrigin);
        }
        best = best.max(z.norm().powf(1.0 / alpha) * (principal_arg(*z) / alpha).cos());
    }
    Ok(best)
}

fn principal_arg(z: Complex64) -> f64 {
    let th = z.arg();
    if th <= -PI {
        PI
    } else {
        th
    }
}

/// Positive weights with Σ β_i² = 1; a zero weight marks a dropped zero
/// block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaWeights {
    pub beta: Vec<f64>,
}

impl BetaWeights {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() || beta.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let s: f64 = beta.iter().map(|b| b * b).sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("Σ β_i² = {s}, expected 1")));
        }
        Ok(Self { beta })
    }
}

/// The blocks T⁻¹ J_off T, T⁻¹ A₁ T, …, T⁻¹ A_r T.
pub fn composite_blocks(dec: &SpectralDecomposition, a_list: &[DMatrix<f64>]) -> Vec<CMatrix> {
    let mut blocks = vec![dec.conjugate(&dec.j_off)];
    blocks.extend(a_list.iter().map(|a| dec.conjugate(&to_complex(a))));
    blocks
}

fn stacked_norm(blocks: &[CMatrix], beta: &[f64]) -> Result<f64> {
    let n = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let mut gram = CMatrix::zeros(n, n);
    for (b, &w) in blocks.iter().zip(beta) {
        if b.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        if w == 0.0 {
            return Err(Error::InvalidArgument(
                "nonzero block with zero weight".into(),
            ));
        }
        gram += b * b.adjoint() * Complex64::new(1.0 / (w * w), 0.0);
    }
    // the gram matrix is Hermitian, so its largest eigenvalue is its 2-norm
    Ok(norm2_c(&gram).sqrt())
}

/// ‖[B₀/β₀ | B₁/β₁ | … | B_r/β_r]‖₂ for the blocks of [`composite_blocks`].
pub fn composite_block_norm(
    dec: &SpectralDecomposition,
    a_list: &[DMatrix<f64>],
    beta: &BetaWeights,
) -> Result<f64> {
    let blocks = composite_blocks(dec, a_list);
    if beta.beta.len() != blocks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} blocks",
            beta.beta.len(),
            blocks.len()
        )));
    }
    stacked_norm(&blocks, &beta.beta)
}

/// Weights minimising the composite norm. The bound Σ‖B_i‖²/β_i² is
/// minimised in closed form by β_i² ∝ ‖B_i‖; a coordinate search on the
/// exact norm then refines that start.
pub fn optimize_beta(
    dec: &SpectralDecomposition,
    a_list: &[DMatrix<f64>],
) -> Result<(BetaWeights, f64)> {
    let blocks = composite_blocks(dec, a_list);
    let norms: Vec<f64> = blocks.iter().map(norm2_c).collect();
    let live: Vec<usize> = (0..blocks.len()).filter(|&i| norms[i] > 0.0).collect();
    if live.is_empty() {
        return Err(Error::AllBlocksZero);
    }
    let total: f64 = live.iter().map(|&i| norms[i]).sum();
    // search in w_i = ln β_i² over the live blocks
    let mut w: Vec<f64> = live.iter().map(|&i| (norms[i] / total).ln()).collect();
    let expand = |w: &[f64]| -> Vec<f64> {
        let s: f64 = w.iter().map(|x| x.exp()).sum();
        let mut beta = vec![0.0; blocks.len()];
        for (&i, x) in live.iter().zip(w) {
            beta[i] = (x.exp() / s).sqrt();
        }
        beta
    };
    let mut best = stacked_norm(&blocks, &expand(&w))?;
    if live.len() > 1 {
        let mut step = 0.5;
        for _ in 0..SEARCH_ITERS {
            let mut improved = false;
            for c in 0..w.len() {
                for dir in [1.0, -1.0] {
                    let mut trial = w.clone();
                    trial[c] += dir * step;
                    let v = stacked_norm(&blocks, &expand(&trial))?;
                    if v < best * (1.0 - 1e-15) {
                        best = v;
                        w = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
                if step < SEARCH_TOL {
                    break;
                }
            }
        }
    }
    Ok((BetaWeights { beta: expand(&w) }, best))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralVerdict {
    /// Strict inequality: asymptotically stable whatever the delays.
    GloballyAsymptoticallyStable,
    /// Equality: stable whatever the delays.
    GloballyStableIndependentOfDelays,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub verdict: SpectralVerdict,
    #[serde(serialize_with = "ser_f64")]
    pub frac_power_measure: f64,
    /// |μ₂(J_d)|^{1/α}, the bound the composite norm is held against.
    #[serde(serialize_with = "crate::format::ser_opt_f64")]
    pub measure_root: Option<f64>,
    #[serde(serialize_with = "crate::format::ser_opt_f64")]
    pub composite_norm: Option<f64>,
    #[serde(serialize_with = "ser_opt_vec")]
    pub beta: Option<Vec<f64>>,
    /// |arg λ| < απ/2 for every eigenvalue.
    pub arg_condition: bool,
    /// Re λ^{1/α} < 0 for every eigenvalue under the unwrapped branch.
    pub power_condition: bool,
    #[serde(serialize_with = "ser_f64")]
    pub cond_t: f64,
}

fn ser_opt_vec<S: serde::Serializer>(
    x: &Option<Vec<f64>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => crate::format::ser_vec_f64(v, s),
        None => s.serialize_none(),
    }
}

/// Delay-independent test: requires max Re λ^{1/α} < 0, then compares the
/// optimised composite norm against |μ₂(J_d)|^{1/α}.
pub fn spectral_certify(
    sys: &FractionalDelaySystem,
    t: Option<&DMatrix<f64>>,
) -> Result<SpectralReport> {
    let alpha = sys.alpha;
    let dec = decompose(sys.a0(), t)?;
    let m = frac_power_measure(&dec, alpha)?;
    let arg_condition = dec
        .j_d
        .iter()
        .all(|z| principal_arg(*z).abs() < alpha * PI / 2.0);
    let mut report = SpectralReport {
        verdict: SpectralVerdict::Inconclusive,
        frac_power_measure: m,
        measure_root: None,
        composite_norm: None,
        beta: None,
        arg_condition,
        power_condition: m < 0.0,
        cond_t: dec.cond_t,
    };
    if m >= 0.0 {
        return Ok(report);
    }
    let root = dec.measure_jd().abs().powf(1.0 / alpha);
    report.measure_root = Some(root);
    let (beta, norm) = match optimize_beta(&dec, &sys.a[1..]) {
        Ok((b, v)) => (Some(b.beta), v),
        Err(Error::AllBlocksZero) => (None, 0.0),
        Err(e) => return Err(e),
    };
    report.composite_norm = Some(norm);
    report.beta = beta;
    report.verdict = if norm < root * (1.0 - TIE_TOL) {
        SpectralVerdict::GloballyAsymptoticallyStable
    } else if norm <= root * (1.0 + TIE_TOL) {
        SpectralVerdict::GloballyStableIndependentOfDelays
    } else {
        SpectralVerdict::Inconclusive
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn norms_and_measures() {
        let m = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert_eq!(matrix_norm(&m, NormP::One), 6.0);
        let nil = dmatrix![0.0, 1.0; 0.0, 0.0];
        assert!((matrix_norm(&nil, NormP::Two) - 1.0).abs() < 1e-15);
        let d = dmatrix![-1.0, 0.0; 0.0, -3.0];
        assert!((matrix_measure(&d, NormP::Two).unwrap() + 1.0).abs() < 1e-15);
        let j = dmatrix![-1.0, 2.0; 0.0, -1.0];
        assert!(matrix_measure(&j, NormP::Two).unwrap().abs() < 1e-14);
        assert_eq!(
            matrix_measure(&DMatrix::zeros(2, 2), NormP::Inf).unwrap(),
            0.0
        );
    }

    #[test]
    fn conditioning() {
        assert!(
            (condition_number(&DMatrix::identity(3, 3), NormP::Inf).unwrap() - 1.0).abs() < 1e-15
        );
        let d = dmatrix![1.0, 0.0; 0.0, 10.0];
        assert!((condition_number(&d, NormP::Two).unwrap() - 10.0).abs() < 1e-12);
        let s = dmatrix![1.0, 0.0; 0.0, 0.0];
        assert_eq!(
            condition_number(&s, NormP::Two).unwrap_err(),
            Error::SingularMatrix
        );
    }

    #[test]
    fn decompositions() {
        let d = decompose(&dmatrix![-1.0, 0.0; 0.0, -2.0], None).unwrap();
        assert_eq!(
            d.j_d,
            vec![Complex64::new(-1.0, 0.0), Complex64::new(-2.0, 0.0)]
        );
        assert!(norm2_c(&(&d.t - CMatrix::identity(2, 2))) < 1e-15);

        let a = dmatrix![0.0, 1.0; -2.0, -3.0];
        let d = decompose(&a, None).unwrap();
        assert!((d.j_d[0].re + 1.0).abs() < 1e-12 && (d.j_d[1].re + 2.0).abs() < 1e-12);
        assert!(d.residual(&a) <= 1e-9 * 3.7);

        let jordan = dmatrix![-1.0, 1.0; 0.0, -1.0];
        assert_eq!(
            decompose(&jordan, None).unwrap_err(),
            Error::DefectiveMatrixNoTransform
        );
        let d = decompose(&jordan, Some(&DMatrix::identity(2, 2))).unwrap();
        assert_eq!(d.j_off[(0, 1)], Complex64::new(1.0, 0.0));
        assert!(d.residual(&jordan) < 1e-15);
    }

    #[test]
    fn fractional_power_branch() {
        let dec = |v: f64| decompose(&dmatrix![v], None).unwrap();
        assert!((frac_power_measure(&dec(-1.0), 1.0).unwrap() + 1.0).abs() < 1e-15);
        assert!(frac_power_measure(&dec(-1.0), 2.0).unwrap().abs() < 1e-15);
        assert!((frac_power_measure(&dec(-1.0), 0.5).unwrap() - 1.0).abs() < 1e-15);
        let zero = decompose(&dmatrix![0.0], Some(&dmatrix![1.0])).unwrap();
        assert_eq!(
            frac_power_measure(&zero, 1.0).unwrap_err(),
            Error::EigenvalueAtOrigin
        );
    }

    #[test]
    fn block_norms() {
        let dec = decompose(&dmatrix![-1.0, 0.0; 0.0, -2.0], None).unwrap();
        let half = DMatrix::identity(2, 2) * 0.5;
        let w = BetaWeights::new(vec![0.0, 1.0]).unwrap();
        assert!(
            (composite_block_norm(&dec, std::slice::from_ref(&half), &w).unwrap() - 0.5).abs()
                < 1e-15
        );
        let zero = BetaWeights::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(
            composite_block_norm(&dec, &[DMatrix::zeros(2, 2)], &zero).unwrap(),
            0.0
        );

        let (b, v) = optimize_beta(&dec, std::slice::from_ref(&half)).unwrap();
        assert_eq!(b.beta, vec![0.0, 1.0]);
        assert!((v - 0.5).abs() < 1e-15);

        let c = 0.7;
        let eq = DMatrix::identity(2, 2) * c;
        let (b, v) = optimize_beta(&dec, &[eq.clone(), eq]).unwrap();
        assert!((b.beta[1] - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((v - 2.0 * c).abs() < 1e-12);
        assert_eq!(
            optimize_beta(&dec, &[DMatrix::zeros(2, 2)]).unwrap_err(),
            Error::AllBlocksZero
        );
    }

    #[test]
    fn worked_example() {
        let sys = FractionalDelaySystem::constant(
            1.0,
            vec![0.0, 1.0],
            vec![
                dmatrix![-2.0, 0.0; 0.0, -3.0],
                DMatrix::identity(2, 2) * 0.5,
            ],
        );
        let r = spectral_certify(&sys, None).unwrap();
        assert_eq!(r.verdict, SpectralVerdict::GloballyAsymptoticallyStable);
        assert!((r.measure_root.unwrap() - 2.0).abs() < 1e-10);
        assert!((r.composite_norm.unwrap() - 0.5).abs() < 1e-10);

        let sys = FractionalDelaySystem::constant(
            0.5,
            vec![0.0, 1.0],
            vec![dmatrix![-1.0], dmatrix![0.1]],
        );
        let r = spectral_certify(&sys, None).unwrap();
        assert_eq!(r.verdict, SpectralVerdict::Inconclusive);
        assert!((r.frac_power_measure - 1.0).abs() < 1e-10);

        let sys = FractionalDelaySystem::constant(1.0, vec![0.0], vec![dmatrix![1.0]]);
        assert_eq!(
            spectral_certify(&sys, None).unwrap().verdict,
            SpectralVerdict::Inconclusive
        );
    }
}
