//! Complex SVD and the Gram-matrix spectral routines used on the hot path.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Thin singular value decomposition `M = U · diag(σ) · Vᴴ`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Mat<Complex64>,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    pub v: Mat<Complex64>,
}

impl Svd {
    /// `U · diag(σ) · Vᴴ`.
    pub fn reconstruct(&self) -> Mat<Complex64> {
        let k = self.singular_values.len();
        let scaled = Mat::<Complex64>::from_fn(self.u.nrows(), k, |i, j| {
            self.u[(i, j)] * self.singular_values[j]
        });
        &scaled * self.v.adjoint()
    }
}

fn check_finite(m: MatRef<'_, Complex64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite matrix entry at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Thin SVD with singular values sorted in non-increasing order.
pub fn svd(m: MatRef<'_, Complex64>) -> Result<Svd> {
    check_finite(m)?;
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok(Svd {
            u: Mat::zeros(m.nrows(), 0),
            singular_values: Vec::new(),
            v: Mat::zeros(m.ncols(), 0),
        });
    }
    let dec = m
        .thin_svd()
        .map_err(|e| Error::Numeric(format!("SVD did not converge: {e:?}")))?;
    let s = dec.S().column_vector();
    let singular_values: Vec<f64> = (0..k).map(|i| s[i].re).collect();
    let order = descending_order(&singular_values);
    let u = Mat::from_fn(m.nrows(), k, |i, j| dec.U()[(i, order[j])]);
    let v = Mat::from_fn(m.ncols(), k, |i, j| dec.V()[(i, order[j])]);
    let singular_values = order.iter().map(|&i| singular_values[i]).collect();
    Ok(Svd {
        u,
        singular_values,
        v,
    })
}

/// Indices that sort `values` in non-increasing order; ties keep their
/// original relative order.
pub(crate) fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Eigen-decomposition of the Gram matrix on the smaller side of `M`.
///
/// For a wide matrix the basis spans the column space (`M Mᴴ = U Σ² Uᴴ`);
/// for a tall one it spans the row space (`Mᴴ M = V Σ² Vᴴ`).
pub(crate) struct GramSpectrum {
    pub basis: Mat<Complex64>,
    pub sigma: Vec<f64>,
    pub wide: bool,
}

fn gram(m: MatRef<'_, Complex64>) -> (Mat<Complex64>, bool) {
    let wide = m.nrows() <= m.ncols();
    let g = if wide {
        m * m.adjoint()
    } else {
        m.adjoint() * m
    };
    (g, wide)
}

pub(crate) fn gram_spectrum(m: MatRef<'_, Complex64>) -> Result<GramSpectrum> {
    let (g, wide) = gram(m);
    let evd = g
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let n = g.nrows();
    let sigma_raw: Vec<f64> = (0..n).map(|i| s[i].re.max(0.0).sqrt()).collect();
    let order = descending_order(&sigma_raw);
    let basis = Mat::from_fn(n, n, |i, j| evd.U()[(i, order[j])]);
    let sigma = order.iter().map(|&i| sigma_raw[i]).collect();
    Ok(GramSpectrum { basis, sigma, wide })
}

/// Singular values from the eigenvalues of the smaller Gram matrix.
///
/// Cheaper than a full SVD; absolute accuracy is about `sqrt(eps) · σ_max`
/// for the smallest values, which is ample for reweighting.
pub fn singular_values_gram(m: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    if m.nrows().min(m.ncols()) == 0 {
        return Ok(Vec::new());
    }
    let (g, _) = gram(m);
    let ev = g
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigendecomposition failed: {e:?}")))?;
    let mut sigma: Vec<f64> = ev.iter().map(|l| l.max(0.0).sqrt()).collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    Ok(sigma)
}

/// Accurate singular values (SVD without vectors).
pub fn singular_values(m: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    check_finite(m)?;
    if m.nrows().min(m.ncols()) == 0 {
        return Ok(Vec::new());
    }
    let mut s = m
        .singular_values()
        .map_err(|e| Error::Numeric(format!("SVD did not converge: {e:?}")))?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}
