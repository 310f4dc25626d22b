//! Robust low-rank tensor decomposition by ADMM.
//!
//! Splits an observed phase tensor `G` into a low-rank part `X` and a sparse
//! outlier part `E` by minimising
//!
//! ```text
//! Σₙ ‖w_n ⊙ σ(X₍ₙ₎)‖₁ + γ ‖W_E ⊙ E‖₁   s.t.  X + E = G
//! ```
//!
//! With all weights fixed at one this is HoRPCA (sum of mode-wise nuclear
//! norms plus an ℓ₁ term). With reweighting enabled the weights are refreshed
//! after every iteration as `1 / (σ + ε_L)` and `1 / (|E| + ε_E)`.
//!
//! One iteration, with `N = 3` modes and the scaled dual `Y`:
//!
//! 1. `X ← (1/N) Σₙ foldₙ(NSVT_{μ N w_n}(unfoldₙ(G + μY − E)))`
//! 2. `E ← NST_{μ γ W_E}(G + μY − X)`
//! 3. `Y ← Y − (X + E − G) / μ`
//! 4. weight refresh (reweighting only)
//!
//! The first iteration always runs with unit weights. Iteration stops once
//! `‖X + E − G‖_F / ‖G‖_F ≤ feasibility_tol` or after `max_iter` iterations.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::prox::{nsvt_with, soft_threshold};
use crate::error::{Error, Result};
use crate::linalg::singular_values_gram;
use crate::tensor::{ComplexTensor3, Dims3, MODES};

/// Parameters of the decomposition. `mu` and `gamma` are derived from the
/// input when left unset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RomioConfig {
    /// Tuning factor; `γ = alpha · λ*` unless `gamma` is given.
    pub alpha: f64,
    pub gamma: Option<f64>,
    /// Penalty parameter; `10 · std(vec(G))` when unset.
    pub mu: Option<f64>,
    pub eps_l: f64,
    pub eps_e: f64,
    pub max_iter: usize,
    pub feasibility_tol: f64,
    /// `false` runs HoRPCA.
    pub reweighting: bool,
}

impl Default for RomioConfig {
    fn default() -> Self {
        Self {
            alpha: 5e-3,
            gamma: None,
            mu: None,
            eps_l: 1e-3,
            eps_e: 1e-3,
            max_iter: 500,
            feasibility_tol: 1e-7,
            reweighting: true,
        }
    }
}

impl RomioConfig {
    /// Default settings with reweighting disabled.
    pub fn horpca() -> Self {
        Self {
            reweighting: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "{name} must be finite and positive, got {v}"
                )))
            }
        };
        positive("alpha", self.alpha)?;
        if let Some(g) = self.gamma {
            positive("gamma", g)?;
        }
        if let Some(m) = self.mu {
            positive("mu", m)?;
        }
        positive("feasibility_tol", self.feasibility_tol)?;
        for (name, eps) in [("eps_l", self.eps_l), ("eps_e", self.eps_e)] {
            if !(eps > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {eps}"
                )));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// `γ` for a tensor of shape `dims`.
    pub fn gamma_for(&self, dims: Dims3) -> f64 {
        self.gamma.unwrap_or(self.alpha * lambda_star(dims))
    }

    /// `μ` for the observed tensor `g`.
    pub fn mu_for(&self, g: &ComplexTensor3) -> f64 {
        self.mu.unwrap_or_else(|| default_mu(g))
    }
}

/// `1 / sqrt(max(I1, I2, I3))`.
pub fn lambda_star(dims: Dims3) -> f64 {
    1.0 / (*dims.iter().max().expect("three dims") as f64).sqrt()
}

/// Population standard deviation of the real and imaginary parts of all
/// entries, taken together as one sample.
pub fn complex_std(g: &ComplexTensor3) -> f64 {
    let n = 2 * g.len();
    let sum: f64 = g.as_slice().iter().map(|z| z.re + z.im).sum();
    let mean = sum / n as f64;
    let ss: f64 = g
        .as_slice()
        .iter()
        .map(|z| (z.re - mean).powi(2) + (z.im - mean).powi(2))
        .sum();
    (ss / n as f64).sqrt()
}

/// `10 · std(vec(G))`, or 1 for a tensor with no spread (e.g. all zeros).
pub fn default_mu(g: &ComplexTensor3) -> f64 {
    let s = complex_std(g);
    if s > 0.0 {
        10.0 * s
    } else {
        1.0
    }
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    /// Recovered low-rank tensor.
    pub x_hat: ComplexTensor3,
    /// Sparse outlier tensor.
    pub e_hat: ComplexTensor3,
    pub iterations: usize,
    /// `‖X + E − G‖_F / ‖G‖_F` after every iteration.
    pub feasibility_residuals: Vec<f64>,
    pub converged: bool,
    /// Parameters actually used.
    pub mu: f64,
    pub gamma: f64,
}

impl DecompositionResult {
    pub fn final_residual(&self) -> f64 {
        self.feasibility_residuals.last().copied().unwrap_or(0.0)
    }
}

/// HoRPCA: the decomposition with every weight held at one.
pub fn horpca(g: &ComplexTensor3, cfg: &RomioConfig) -> Result<DecompositionResult> {
    if cfg.reweighting {
        return Err(Error::InvalidArgument(
            "horpca expects a configuration with reweighting disabled".into(),
        ));
    }
    run(g, cfg, |_| {})
}

/// Reweighted decomposition (RoMIO).
pub fn romio_decompose(g: &ComplexTensor3, cfg: &RomioConfig) -> Result<DecompositionResult> {
    if !cfg.reweighting {
        return Err(Error::InvalidArgument(
            "romio_decompose expects a configuration with reweighting enabled".into(),
        ));
    }
    run(g, cfg, |_| {})
}

/// Dispatches on `cfg.reweighting`.
pub fn decompose(g: &ComplexTensor3, cfg: &RomioConfig) -> Result<DecompositionResult> {
    run(g, cfg, |_| {})
}

/// Snapshot handed to an observer after every iteration.
pub struct IterationState<'a> {
    /// 1-based.
    pub iteration: usize,
    pub residual: f64,
    pub x: &'a ComplexTensor3,
    pub e: &'a ComplexTensor3,
}

/// [`decompose`] with a callback after every iteration.
pub fn decompose_observed(
    g: &ComplexTensor3,
    cfg: &RomioConfig,
    observer: impl FnMut(&IterationState<'_>),
) -> Result<DecompositionResult> {
    run(g, cfg, observer)
}

/// `1 / (v + ε)`; an infinite `ε` pins the weight at one.
#[inline]
fn reweight(v: f64, eps: f64) -> f64 {
    if eps.is_infinite() {
        1.0
    } else {
        1.0 / (v + eps)
    }
}

fn run(
    g: &ComplexTensor3,
    cfg: &RomioConfig,
    mut observer: impl FnMut(&IterationState<'_>),
) -> Result<DecompositionResult> {
    cfg.validate()?;
    if !g.is_finite() {
        return Err(Error::InvalidArgument(
            "observed tensor has non-finite entries".into(),
        ));
    }
    let dims = g.dims();
    let mu = cfg.mu_for(g);
    let gamma = cfg.gamma_for(dims);
    let g_norm = g.frobenius();
    let denom = if g_norm > 0.0 { g_norm } else { 1.0 };
    let modes = MODES as f64;
    let zero = Complex64::new(0.0, 0.0);

    let mut x = ComplexTensor3::zeros(dims)?;
    let mut e = ComplexTensor3::zeros(dims)?;
    let mut y = ComplexTensor3::zeros(dims)?;
    let mut w_l: Vec<Vec<f64>> = (0..MODES)
        .map(|n| vec![1.0; crate::decomp::hosvd::max_rank(dims, n)])
        .collect();
    let mut w_e = vec![1.0; g.len()];

    let mut residuals = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_iter {
        // X-update on G + μY − E.
        let a_data: Vec<Complex64> = g
            .as_slice()
            .iter()
            .zip(y.as_slice())
            .zip(e.as_slice())
            .map(|((&gv, &yv), &ev)| gv + yv * mu - ev)
            .collect();
        let a = ComplexTensor3::from_raw(dims, a_data);
        let parts: Vec<Mat<Complex64>> = (0..MODES)
            .into_par_iter()
            .map(|n| {
                let w = &w_l[n];
                nsvt_with(a.unfold_matrix(n).as_ref(), |i| {
                    mu * modes * w[i.min(w.len() - 1)]
                })
            })
            .collect::<Result<_>>()?;
        let mut x_data = vec![zero; g.len()];
        for (n, part) in parts.iter().enumerate() {
            let folded = ComplexTensor3::fold_matrix(part.as_ref(), n, dims);
            for (acc, v) in x_data.iter_mut().zip(folded.as_slice()) {
                *acc += v;
            }
        }
        for v in &mut x_data {
            *v /= modes;
        }
        x = ComplexTensor3::from_raw(dims, x_data);

        // E-update on G + μY − X.
        let e_data: Vec<Complex64> = g
            .as_slice()
            .iter()
            .zip(y.as_slice())
            .zip(x.as_slice())
            .zip(&w_e)
            .map(|(((&gv, &yv), &xv), &we)| soft_threshold(gv + yv * mu - xv, mu * gamma * we))
            .collect();
        e = ComplexTensor3::from_raw(dims, e_data);

        // Dual ascent and feasibility.
        let mut r2 = 0.0;
        for (((yv, &xv), &ev), &gv) in y
            .as_mut_slice()
            .iter_mut()
            .zip(x.as_slice())
            .zip(e.as_slice())
            .zip(g.as_slice())
        {
            let r = xv + ev - gv;
            r2 += r.norm_sqr();
            *yv -= r / mu;
        }
        let residual = r2.sqrt() / denom;
        residuals.push(residual);

        if cfg.reweighting {
            for (n, w) in w_l.iter_mut().enumerate() {
                let sigma = singular_values_gram(x.unfold_matrix(n).as_ref())?;
                *w = sigma.iter().map(|&s| reweight(s, cfg.eps_l)).collect();
            }
            for (w, ev) in w_e.iter_mut().zip(e.as_slice()) {
                *w = reweight(ev.norm(), cfg.eps_e);
            }
        }

        observer(&IterationState {
            iteration: residuals.len(),
            residual,
            x: &x,
            e: &e,
        });

        if !residual.is_finite() {
            return Err(Error::Numeric(
                "iteration diverged to non-finite values".into(),
            ));
        }
        if residual <= cfg.feasibility_tol {
            converged = true;
            break;
        }
    }

    Ok(DecompositionResult {
        iterations: residuals.len(),
        x_hat: x,
        e_hat: e,
        feasibility_residuals: residuals,
        converged,
        mu,
        gamma,
    })
}
