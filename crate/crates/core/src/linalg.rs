//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest singular value of a real matrix.
pub fn norm2(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.norm();
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Largest singular value of a complex matrix.
pub fn norm2_c(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Selector for the induced ℓ_p norms supported by the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum NormP {
    #[serde(rename = "1")]
    One,
    #[default]
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

/// Induced ℓ_p norm of a real matrix.
pub fn induced_norm(m: &DMatrix<f64>, p: NormP) -> f64 {
    match p {
        NormP::Two => norm2(m),
        NormP::One => m
            .column_iter()
            .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormP::Inf => m
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max),
    }
}

/// Euclidean norm of a vector.
pub fn vnorm(v: &DVector<f64>) -> f64 {
    v.norm()
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// 2-norm condition number of a complex matrix (`inf` when singular).
pub fn cond2_c(m: &CMatrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Spectral abscissa: the largest real part of the eigenvalues.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Matrix exponential (Padé scaling and squaring).
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.exp()
}

/// Eigenvalues and unit eigenvectors of a real square matrix.
///
/// Eigenvalues are sorted by decreasing real part, ties by decreasing
/// imaginary part. Each eigenvector column has unit 2-norm and its largest
/// component is real and positive.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<Complex64>,
    pub vectors: CMatrix,
    pub inverse: CMatrix,
    pub cond: f64,
}

/// Computes an eigenbasis, failing with [`Error::DefectiveMatrixNoTransform`]
/// when some eigenvalue has a deficient eigenspace.
pub fn eigenpairs(a: &DMatrix<f64>) -> Result<EigenPairs> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(
            "eigenpairs needs a square matrix".into(),
        ));
    }
    let mut values: Vec<Complex64> = a.clone().complex_eigenvalues().iter().copied().collect();
    values.sort_by(|x, y| {
        y.re.partial_cmp(&x.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y.im.partial_cmp(&x.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let scale = norm2(a).max(1e-300);
    let cluster_tol = 1e-9 * scale.max(1.0);
    let null_tol = 1e-8 * scale.max(1.0);
    let ac = to_complex(a);
    let mut vectors = CMatrix::zeros(n, n);
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (values[j] - values[i]).norm() <= cluster_tol {
            j += 1;
        }
        let mult = j - i;
        let lambda = values[i..j].iter().sum::<Complex64>() / mult as f64;
        let shifted = &ac - CMatrix::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested V^H");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&p, &q| {
            svd.singular_values[p]
                .partial_cmp(&svd.singular_values[q])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if svd.singular_values[order[mult - 1]] > null_tol {
            return Err(Error::DefectiveMatrixNoTransform);
        }
        for (c, &row) in order.iter().take(mult).enumerate() {
            let mut v: DVector<Complex64> = v_t.row(row).transpose().map(|z| z.conj());
            normalize_phase(&mut v);
            vectors.set_column(i + c, &v);
            values[i + c] = lambda;
        }
        i = j;
    }
    let inverse = vectors
        .clone()
        .try_inverse()
        .ok_or(Error::DefectiveMatrixNoTransform)?;
    let cond = cond2_c(&vectors);
    Ok(EigenPairs {
        values,
        vectors,
        inverse,
        cond,
    })
}

fn normalize_phase(v: &mut DVector<Complex64>) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| {
            a.norm()
                .partial_cmp(&b.norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}
