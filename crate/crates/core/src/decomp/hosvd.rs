//! Higher-order SVD (Tucker) and its truncation.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, svd};
use crate::tensor::{ComplexTensor3, Dims3, MODES};

/// Core tensor and orthonormal factor matrices with
/// `X = core ×₁ U ×₂ V ×₃ W`.
#[derive(Clone, Debug)]
pub struct HosvdFactors {
    pub core: ComplexTensor3,
    /// `[U, V, W]`, of shapes `I1×R1`, `I2×R2`, `I3×R3`.
    pub factors: [Mat<Complex64>; 3],
    pub multilinear_rank: [usize; 3],
}

impl HosvdFactors {
    /// Multiplies the core by every factor.
    pub fn reconstruct(&self) -> Result<ComplexTensor3> {
        let mut out = self.core.clone();
        for (n, f) in self.factors.iter().enumerate() {
            out = out.mode_multiply(f.as_ref(), n + 1)?;
        }
        Ok(out)
    }
}

/// Relative tolerance below which a singular value counts as zero when the
/// numerical multilinear rank is determined.
fn rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Full HoSVD. Each factor holds the left singular vectors of the mode-n
/// unfolding whose singular values are numerically nonzero (at least one is
/// always kept); the core is `X ×₁ Uᴴ ×₂ Vᴴ ×₃ Wᴴ`.
pub fn hosvd(x: &ComplexTensor3) -> Result<HosvdFactors> {
    let mut factors: Vec<Mat<Complex64>> = Vec::with_capacity(MODES);
    let mut rank = [0usize; 3];
    for n in 0..MODES {
        let m = x.unfold_matrix(n);
        let dec = svd(m.as_ref())?;
        let smax = dec.singular_values.first().copied().unwrap_or(0.0);
        let tol = rank_tolerance(m.nrows(), m.ncols(), smax);
        let r = dec
            .singular_values
            .iter()
            .filter(|&&s| s > tol)
            .count()
            .max(1);
        rank[n] = r;
        factors.push(Mat::from_fn(m.nrows(), r, |i, j| dec.u[(i, j)]));
    }
    let mut core = x.clone();
    for (n, f) in factors.iter().enumerate() {
        core = core.mode_multiply(f.adjoint().to_owned().as_ref(), n + 1)?;
    }
    let factors: [Mat<Complex64>; 3] = factors.try_into().expect("three modes");
    Ok(HosvdFactors {
        core,
        factors,
        multilinear_rank: rank,
    })
}

/// How a truncated HoSVD chooses its ranks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// Explicit `(K1, K2, K3)`.
    Ranks([usize; 3]),
    /// Keep, per mode, the singular values with `σᵢ / σ_max ≥ t`, `t ∈ (0, 1]`.
    Threshold(f64),
}

/// Ranks retained per mode by a normalized-singular-value threshold.
pub fn threshold_ranks(normalized: &[Vec<f64>; 3], t: f64) -> [usize; 3] {
    let mut ranks = [0; 3];
    for (n, s) in normalized.iter().enumerate() {
        ranks[n] = s.iter().filter(|&&v| v >= t).count().max(1);
    }
    ranks
}

/// Truncated HoSVD: keeps the leading `K_n` singular vectors of every mode
/// and returns `S_K ×₁ U_K ×₂ V_K ×₃ W_K` together with the ranks used.
pub fn truncate_hosvd(
    x: &ComplexTensor3,
    spec: Truncation,
) -> Result<(ComplexTensor3, [usize; 3])> {
    let dims = x.dims();
    let mut bases = Vec::with_capacity(MODES);
    let mut spectra: [Vec<f64>; 3] = Default::default();
    for (n, spectrum) in spectra.iter_mut().enumerate() {
        let dec = svd(x.unfold_matrix(n).as_ref())?;
        let smax = dec.singular_values.first().copied().unwrap_or(0.0);
        *spectrum = dec
            .singular_values
            .iter()
            .map(|s| if smax > 0.0 { s / smax } else { 0.0 })
            .collect();
        bases.push(dec.u);
    }
    let ranks = match spec {
        Truncation::Ranks(k) => {
            for n in 0..MODES {
                let limit = max_rank(dims, n);
                if k[n] == 0 || k[n] > limit {
                    return Err(Error::InvalidArgument(format!(
                        "rank {} for mode {} outside 1..={limit}",
                        k[n],
                        n + 1
                    )));
                }
            }
            k
        }
        Truncation::Threshold(t) => {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "threshold must lie in (0, 1], got {t}"
                )));
            }
            threshold_ranks(&spectra, t)
        }
    };
    let truncated: Vec<Mat<Complex64>> = bases
        .iter()
        .zip(ranks)
        .map(|(u, k)| Mat::from_fn(u.nrows(), k, |i, j| u[(i, j)]))
        .collect();
    let mut core = x.clone();
    for (n, u) in truncated.iter().enumerate() {
        core = core.mode_multiply(u.adjoint().to_owned().as_ref(), n + 1)?;
    }
    let mut approx = core;
    for (n, u) in truncated.iter().enumerate() {
        approx = approx.mode_multiply(u.as_ref(), n + 1)?;
    }
    Ok((approx, ranks))
}

/// Largest possible rank of the mode-`n` (0-based) unfolding.
pub fn max_rank(dims: Dims3, n: usize) -> usize {
    let total: usize = dims.iter().product();
    dims[n].min(total / dims[n])
}

/// `σᵢ / σ_max` of every mode unfolding, in non-increasing order.
pub fn normalized_singular_values(x: &ComplexTensor3) -> Result<[Vec<f64>; 3]> {
    let mut out: [Vec<f64>; 3] = Default::default();
    for (n, slot) in out.iter_mut().enumerate() {
        let s = singular_values(x.unfold_matrix(n).as_ref())?;
        let smax = s.first().copied().unwrap_or(0.0);
        *slot = s
            .iter()
            .map(|v| if smax > 0.0 { v / smax } else { 0.0 })
            .collect();
    }
    Ok(out)
}

/// Count of singular values above `tol` in every mode unfolding.
pub fn multilinear_rank(x: &ComplexTensor3, tol: f64) -> Result<[usize; 3]> {
    let mut out = [0; 3];
    for (n, slot) in out.iter_mut().enumerate() {
        *slot = singular_values(x.unfold_matrix(n).as_ref())?
            .iter()
            .filter(|&&s| s > tol)
            .count();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(dims: Dims3, seed: u64) -> ComplexTensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexTensor3::from_fn(dims, |_, _, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap()
    }

    fn separable() -> (ComplexTensor3, f64) {
        let a = [
            Complex64::new(1.0, 1.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(0.0, 0.5),
        ];
        let b = [Complex64::new(0.5, 0.0), Complex64::new(1.0, -1.0)];
        let c = [
            Complex64::new(3.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(-1.0, 0.0),
        ];
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let x = ComplexTensor3::from_fn([3, 2, 4], |i, j, k| a[i] * b[j] * c[k]).unwrap();
        (x, norm(&a) * norm(&b) * norm(&c))
    }

    #[test]
    fn separable_tensor_has_single_core_entry() {
        let (x, expected) = separable();
        let h = hosvd(&x).unwrap();
        assert_eq!(h.multilinear_rank, [1, 1, 1]);
        assert_eq!(h.core.dims(), [1, 1, 1]);
        assert!((h.core.as_slice()[0].norm() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn full_rank_reconstruction_is_exact() {
        let x = random_tensor([6, 5, 4], 21);
        let h = hosvd(&x).unwrap();
        assert_eq!(h.multilinear_rank, [6, 5, 4]);
        let err = h.reconstruct().unwrap().sub(&x).unwrap().frobenius();
        assert!(err < 1e-9 * x.frobenius());
        for f in &h.factors {
            let gram = f.adjoint() * f;
            let eye = Mat::<Complex64>::identity(f.ncols(), f.ncols());
            assert!((gram - eye).norm_l2() < 1e-10);
        }
    }

    #[test]
    fn constant_tensor_has_unit_multilinear_rank() {
        let x = ComplexTensor3::from_fn([3, 3, 3], |_, _, _| Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(hosvd(&x).unwrap().multilinear_rank, [1, 1, 1]);
    }

    #[test]
    fn truncation_at_full_rank_is_lossless() {
        let x = random_tensor([5, 4, 3], 4);
        let (approx, ranks) = truncate_hosvd(&x, Truncation::Ranks([5, 4, 3])).unwrap();
        assert_eq!(ranks, [5, 4, 3]);
        assert!(approx.sub(&x).unwrap().frobenius() < 1e-9 * x.frobenius());
    }

    #[test]
    fn unit_threshold_keeps_one_component_for_generic_input() {
        let x = random_tensor([5, 4, 3], 6);
        let (_, ranks) = truncate_hosvd(&x, Truncation::Threshold(1.0)).unwrap();
        assert_eq!(ranks, [1, 1, 1]);
    }

    #[test]
    fn ranks_do_not_increase_with_threshold() {
        let x = random_tensor([6, 5, 4], 8);
        let mut prev = [usize::MAX; 3];
        for t in [0.05, 0.2, 0.4, 0.6, 0.8, 1.0] {
            let (_, r) = truncate_hosvd(&x, Truncation::Threshold(t)).unwrap();
            for n in 0..3 {
                assert!(r[n] <= prev[n]);
            }
            prev = r;
        }
    }

    #[test]
    fn invalid_truncations_are_rejected() {
        let x = random_tensor([3, 3, 2], 1);
        assert!(truncate_hosvd(&x, Truncation::Ranks([4, 1, 1])).is_err());
        assert!(truncate_hosvd(&x, Truncation::Ranks([0, 1, 1])).is_err());
        assert!(truncate_hosvd(&x, Truncation::Threshold(0.0)).is_err());
        assert!(truncate_hosvd(&x, Truncation::Threshold(1.5)).is_err());
    }

    #[test]
    fn normalized_spectrum_of_separable_tensor() {
        let (x, _) = separable();
        for s in normalized_singular_values(&x).unwrap() {
            assert!((s[0] - 1.0).abs() < 1e-15);
            assert!(s[1..].iter().all(|v| *v < 1e-12));
        }
    }
}
