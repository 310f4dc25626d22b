//! Proximal operators: nonuniform singular value thresholding (NSVT) and
//! nonuniform soft thresholding (NST).

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::gram_spectrum;
use crate::tensor::{ComplexTensor3, RealTensor3};

fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "thresholds must be finite and non-negative, got {w}"
        )));
    }
    Ok(())
}

/// Threshold for the `i`-th singular value: `weights[i]`, or the last
/// weight when the vector is shorter than the spectrum.
#[inline]
pub(crate) fn padded_weight(weights: &[f64], i: usize) -> f64 {
    weights[i.min(weights.len() - 1)]
}

/// `U · diag(max(σᵢ − wᵢ, 0)) · Vᴴ` for the SVD `M = U · diag(σ) · Vᴴ`.
///
/// `weights[i]` shrinks the `i`-th largest singular value; a short weight
/// vector is padded with its last entry.
pub fn nsvt(m: MatRef<'_, Complex64>, weights: &[f64]) -> Result<Mat<Complex64>> {
    check_weights(weights)?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::InvalidArgument("non-finite matrix entry".into()));
            }
        }
    }
    if m.nrows().min(m.ncols()) == 0 {
        return Ok(Mat::zeros(m.nrows(), m.ncols()));
    }
    if weights.is_empty() {
        return Err(Error::InvalidArgument("empty threshold vector".into()));
    }
    nsvt_with(m, |i| padded_weight(weights, i))
}

/// NSVT with thresholds supplied by index. Works on the Gram matrix of the
/// smaller side: with `M Mᴴ = U Σ² Uᴴ`,
/// `T(M) = U · diag(max(σ − w, 0) / σ) · Uᴴ · M`.
pub(crate) fn nsvt_with(
    m: MatRef<'_, Complex64>,
    threshold: impl Fn(usize) -> f64,
) -> Result<Mat<Complex64>> {
    let spec = gram_spectrum(m)?;
    let n = spec.sigma.len();
    let mut kept = Vec::with_capacity(n);
    for (i, &s) in spec.sigma.iter().enumerate() {
        let shrunk = s - threshold(i);
        if shrunk > 0.0 && s > 0.0 {
            kept.push((i, shrunk / s));
        }
    }
    if kept.is_empty() {
        return Ok(Mat::zeros(m.nrows(), m.ncols()));
    }
    let basis = Mat::from_fn(n, kept.len(), |r, c| spec.basis[(r, kept[c].0)]);
    let scaled = Mat::from_fn(n, kept.len(), |r, c| basis[(r, c)] * kept[c].1);
    Ok(if spec.wide {
        &scaled * (basis.adjoint() * m)
    } else {
        (m * &scaled) * basis.adjoint()
    })
}

/// Complex sign `a / |a|`, with `sign(0) = 0`.
#[inline]
pub fn complex_sign(a: Complex64) -> Complex64 {
    let r = a.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        a / r
    }
}

/// Shrinks a single entry's magnitude by `threshold`, keeping its phase.
#[inline]
pub(crate) fn soft_threshold(a: Complex64, threshold: f64) -> Complex64 {
    let r = a.norm();
    if r > threshold {
        a * ((r - threshold) / r)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// `sign(T) ⊙ max(|T| − W, 0)` entrywise.
pub fn nst(t: &ComplexTensor3, w: &RealTensor3) -> Result<ComplexTensor3> {
    if t.dims() != w.dims() {
        return Err(Error::ShapeMismatch(format!(
            "tensor {:?} vs thresholds {:?}",
            t.dims(),
            w.dims()
        )));
    }
    check_weights(w.as_slice())?;
    let data = t
        .as_slice()
        .iter()
        .zip(w.as_slice())
        .map(|(&a, &th)| soft_threshold(a, th))
        .collect();
    Ok(ComplexTensor3::from_raw(t.dims(), data))
}
