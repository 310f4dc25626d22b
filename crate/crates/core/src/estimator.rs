//! Periodogram estimation of elevation and deformation, and the error
//! metrics used to score recovered stacks and maps.
//!
//! For a pixel with samples `g_l` the objective is
//!
//! ```text
//! γ(s, p) = |Σ_l g_l · exp(+j(a_l·s + c_l·p))| / Σ_l |g_l|
//! ```
//!
//! with `a_l = 4π b_l / (λ r)` and `c_l = 4π τ_l / λ` (deformation in mm).
//! The search maximises `γ` over a uniform grid, then refines around the
//! winner on a grid `refine` times finer.
//!
//! The coarse pass returns exactly the argmax of a dense scan (lowest linear
//! index on ties, elevation index fastest) but skips most nodes: the grid is
//! cut into small blocks and a block is only scanned when a Lipschitz bound,
//! `|Z(s,p) − Z(s',p')| ≤ Σ|g_l|·(|a_l||s−s'| + |c_l||p−p'|)`, says it could
//! beat the best value found so far.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RealGrid;
use crate::insar::model::{GeoMaps, StackMetadata};
use crate::tensor::{principal_angle, ComplexTensor3};

/// Uniformly spaced search axis `min, min + step, …` up to `max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        let a = Self { min, max, step };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidArgument("search axis must be finite".into()));
        }
        if self.step <= 0.0 || self.max < self.min {
            return Err(Error::InvalidArgument(format!(
                "search axis needs min <= max and step > 0, got ({}, {}, {})",
                self.min, self.max, self.step
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, k: usize) -> f64 {
        self.min + k as f64 * self.step
    }

    pub fn midpoint(&self) -> f64 {
        (self.min + self.max) / 2.0
    }

    fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchGrid {
    /// Metres.
    pub elevation: Axis,
    /// mm/year or mm.
    pub deformation: Axis,
    /// Subdivision of the local refinement pass; `1` disables it.
    pub refine: usize,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            elevation: Axis {
                min: -60.0,
                max: 60.0,
                step: 0.25,
            },
            deformation: Axis {
                min: -20.0,
                max: 20.0,
                step: 0.1,
            },
            refine: 10,
        }
    }
}

impl SearchGrid {
    pub fn validate(&self) -> Result<()> {
        self.elevation.validate()?;
        self.deformation.validate()?;
        if self.refine == 0 {
            return Err(Error::InvalidArgument("refine must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PixelStatus {
    Valid,
    /// One parameter does not affect the phase (all its gradients are zero);
    /// it is reported at the axis midpoint.
    Degenerate,
    /// All samples are zero or non-finite; both parameters sit at the axis
    /// midpoints and the peak is zero.
    Invalid,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelEstimate {
    pub elevation: f64,
    pub deformation: f64,
    /// Normalised periodogram peak in `[0, 1]`.
    pub peak: f64,
    pub status: PixelStatus,
}

/// Block size of the coarse pass, in nodes per axis.
const BLOCK: usize = 8;

/// Phasor rows `exp(j k_l v_i)` stored as separate real and imaginary
/// parts, row `i` holding all images.
#[derive(Clone, Debug)]
struct PhasorTable {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl PhasorTable {
    fn new(axis: &Axis, k: &[f64]) -> Self {
        let mut re = Vec::with_capacity(axis.len() * k.len());
        let mut im = Vec::with_capacity(axis.len() * k.len());
        for i in 0..axis.len() {
            let v = axis.value(i);
            for &kl in k {
                let z = phasor(kl, v);
                re.push(z.re);
                im.push(z.im);
            }
        }
        Self { re, im }
    }
}

/// `|Σ h_l s_l|` with a fixed summation order (four interleaved partial
/// sums), so that equal inputs always give bitwise equal outputs.
#[inline]
fn dot_abs(hr: &[f64], hi: &[f64], sr: &[f64], si: &[f64]) -> f64 {
    let n = hr.len();
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let full = n - n % 4;
    let mut l = 0;
    while l < full {
        for q in 0..4 {
            let (a, b, c, d) = (hr[l + q], hi[l + q], sr[l + q], si[l + q]);
            re[q] += a * c - b * d;
            im[q] += a * d + b * c;
        }
        l += 4;
    }
    for q in 0..n - full {
        let (a, b, c, d) = (hr[full + q], hi[full + q], sr[full + q], si[full + q]);
        re[q] += a * c - b * d;
        im[q] += a * d + b * c;
    }
    let r = (re[0] + re[1]) + (re[2] + re[3]);
    let i = (im[0] + im[1]) + (im[2] + im[3]);
    (r * r + i * i).sqrt()
}

/// `g_l · exp(j c_l p)` for one deformation value.
#[inline]
fn modulate(g: &[Complex64], pr: &[f64], pi: &[f64], hr: &mut [f64], hi: &mut [f64]) {
    for l in 0..g.len() {
        let z = g[l] * Complex64::new(pr[l], pi[l]);
        hr[l] = z.re;
        hi[l] = z.im;
    }
}

/// Periodogram prepared for one geometry and search grid.
#[derive(Clone, Debug)]
pub struct Periodogram {
    grid: SearchGrid,
    a: Vec<f64>,
    c: Vec<f64>,
    s_axis: Axis,
    p_axis: Axis,
    degenerate: bool,
    s_table: PhasorTable,
    p_table: PhasorTable,
}

impl Periodogram {
    pub fn new(meta: &StackMetadata, grid: &SearchGrid) -> Result<Self> {
        meta.validate()?;
        grid.validate()?;
        let (a, c) = meta.phase_gradients();
        let collapse = |axis: Axis, gradients: &[f64]| {
            if gradients.iter().all(|&v| v == 0.0) {
                let m = axis.midpoint();
                (
                    Axis {
                        min: m,
                        max: m,
                        step: axis.step,
                    },
                    true,
                )
            } else {
                (axis, false)
            }
        };
        let (s_axis, ds) = collapse(grid.elevation, &a);
        let (p_axis, dp) = collapse(grid.deformation, &c);
        Ok(Self {
            s_table: PhasorTable::new(&s_axis, &a),
            p_table: PhasorTable::new(&p_axis, &c),
            grid: *grid,
            a,
            c,
            s_axis,
            p_axis,
            degenerate: ds || dp,
        })
    }

    pub fn n_images(&self) -> usize {
        self.a.len()
    }

    /// Normalised objective at an arbitrary `(s, p)`.
    pub fn objective(&self, g: &[Complex64], s: f64, p: f64) -> f64 {
        let norm: f64 = g.iter().map(|z| z.norm()).sum();
        if norm == 0.0 {
            return 0.0;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..g.len() {
            acc += g[l] * phasor(self.c[l], p) * phasor(self.a[l], s);
        }
        acc.norm() / norm
    }

    /// Exact argmax of `|Z|` over the coarse grid: `(ks, kp, |Z|)`.
    fn coarse(&self, g: &[Complex64], weights: &[f64]) -> (usize, usize, f64) {
        let n = g.len();
        let ns = self.s_axis.len();
        let np = self.p_axis.len();
        let bs = ns.div_ceil(BLOCK);
        let bp = np.div_ceil(BLOCK);
        let total: f64 = weights.iter().sum();
        let wa: f64 = weights.iter().zip(&self.a).map(|(w, a)| w * a.abs()).sum();
        let wc: f64 = weights.iter().zip(&self.c).map(|(w, c)| w * c.abs()).sum();

        // g ⊙ exp(j c p) for every deformation node.
        let mut hr = vec![0.0; np * n];
        let mut hi = vec![0.0; np * n];
        for kp in 0..np {
            let r = kp * n..(kp + 1) * n;
            modulate(
                g,
                &self.p_table.re[r.clone()],
                &self.p_table.im[r.clone()],
                &mut hr[r.clone()],
                &mut hi[r],
            );
        }
        let node = |ks: usize, kp: usize| {
            let (h, s) = (kp * n..(kp + 1) * n, ks * n..(ks + 1) * n);
            dot_abs(
                &hr[h.clone()],
                &hi[h],
                &self.s_table.re[s.clone()],
                &self.s_table.im[s],
            )
        };

        // Block centres seed the incumbent; a block is scanned only if its
        // bound reaches the incumbent.
        let index = |ks: usize, kp: usize| kp * ns + ks;
        let mut best = (0usize, 0usize, f64::NEG_INFINITY);
        let mut blocks = Vec::with_capacity(bs * bp);
        for jp in 0..bp {
            let (p0, p1) = (jp * BLOCK, ((jp + 1) * BLOCK).min(np));
            let cp = (p0 + p1 - 1) / 2;
            let hp = (cp - p0).max(p1 - 1 - cp) as f64 * self.p_axis.step;
            for js in 0..bs {
                let (s0, s1) = (js * BLOCK, ((js + 1) * BLOCK).min(ns));
                let cs = (s0 + s1 - 1) / 2;
                let hs = (cs - s0).max(s1 - 1 - cs) as f64 * self.s_axis.step;
                let centre = node(cs, cp);
                if centre > best.2 || (centre == best.2 && index(cs, cp) < index(best.0, best.1)) {
                    best = (cs, cp, centre);
                }
                let bound = centre + wa * hs + wc * hp + 1e-9 * total;
                blocks.push((bound, s0, s1, p0, p1));
            }
        }
        for &(bound, s0, s1, p0, p1) in &blocks {
            if bound < best.2 {
                continue;
            }
            for kp in p0..p1 {
                for ks in s0..s1 {
                    let v = node(ks, kp);
                    if v > best.2 || (v == best.2 && index(ks, kp) < index(best.0, best.1)) {
                        best = (ks, kp, v);
                    }
                }
            }
        }
        best
    }

    /// Estimate for one pixel's samples.
    pub fn estimate(&self, g: &[Complex64]) -> Result<PixelEstimate> {
        let n = self.n_images();
        if g.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "pixel has {} samples, geometry has {n} images",
                g.len()
            )));
        }
        let weights: Vec<f64> = g.iter().map(|z| z.norm()).collect();
        let norm: f64 = weights.iter().sum();
        if !(norm > 0.0 && norm.is_finite()) {
            return Ok(PixelEstimate {
                elevation: self.grid.elevation.midpoint(),
                deformation: self.grid.deformation.midpoint(),
                peak: 0.0,
                status: PixelStatus::Invalid,
            });
        }
        let (ks, kp, coarse) = self.coarse(g, &weights);
        let (mut s, mut p, mut best) = (self.s_axis.value(ks), self.p_axis.value(kp), coarse);

        let r = self.grid.refine;
        let s_fixed = self.s_axis.min == self.s_axis.max;
        let p_fixed = self.p_axis.min == self.p_axis.max;
        if r > 1 && !(s_fixed && p_fixed) {
            // Local grid of spacing step/r over ±1 coarse cell; its centre
            // node reproduces the coarse value bit for bit.
            let (sc, pc) = (s, p);
            let offsets = |fixed: bool, centre: f64, step: f64| -> Vec<f64> {
                if fixed {
                    vec![centre]
                } else {
                    let d = step / r as f64;
                    (0..=2 * r)
                        .map(|i| centre + (i as f64 - r as f64) * d)
                        .collect()
                }
            };
            let s_vals: Vec<f64> = offsets(s_fixed, sc, self.s_axis.step)
                .into_iter()
                .filter(|v| self.s_axis.contains(*v))
                .collect();
            let p_vals: Vec<f64> = offsets(p_fixed, pc, self.p_axis.step)
                .into_iter()
                .filter(|v| self.p_axis.contains(*v))
                .collect();
            let rows = |vals: &[f64], k: &[f64]| {
                let mut re = Vec::with_capacity(vals.len() * n);
                let mut im = Vec::with_capacity(vals.len() * n);
                for &v in vals {
                    for &kl in k {
                        let z = phasor(kl, v);
                        re.push(z.re);
                        im.push(z.im);
                    }
                }
                (re, im)
            };
            let (sr, si) = rows(&s_vals, &self.a);
            let (pr, pi) = rows(&p_vals, &self.c);
            let mut hr = vec![0.0; n];
            let mut hi = vec![0.0; n];
            for (ip, &pv) in p_vals.iter().enumerate() {
                let r = ip * n..(ip + 1) * n;
                modulate(g, &pr[r.clone()], &pi[r], &mut hr, &mut hi);
                for (is, &sv) in s_vals.iter().enumerate() {
                    let q = is * n..(is + 1) * n;
                    let v = dot_abs(&hr, &hi, &sr[q.clone()], &si[q]);
                    if v > best {
                        best = v;
                        s = sv;
                        p = pv;
                    }
                }
            }
        }
        Ok(PixelEstimate {
            elevation: s,
            deformation: p,
            peak: (best / norm).min(1.0),
            status: if self.degenerate {
                PixelStatus::Degenerate
            } else {
                PixelStatus::Valid
            },
        })
    }
}

#[inline]
fn phasor(k: f64, v: f64) -> Complex64 {
    Complex64::from_polar(1.0, k * v)
}

/// Periodogram estimate for a single pixel.
pub fn periodogram_pixel(
    phases: &[Complex64],
    meta: &StackMetadata,
    grid: &SearchGrid,
) -> Result<PixelEstimate> {
    Periodogram::new(meta, grid)?.estimate(phases)
}

/// Per-pixel estimates over a whole stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateMaps {
    pub elevation: RealGrid,
    pub deformation: RealGrid,
    /// Normalised periodogram peak.
    pub objective: RealGrid,
    /// Column-major, like the grids.
    pub status: Vec<PixelStatus>,
}

impl EstimateMaps {
    pub fn valid_count(&self) -> usize {
        self.status
            .iter()
            .filter(|&&s| s != PixelStatus::Invalid)
            .count()
    }
}

/// Runs the periodogram on every pixel of `g`. Pixels are processed in
/// parallel; each result depends only on its own samples.
pub fn estimate_maps(
    g: &ComplexTensor3,
    meta: &StackMetadata,
    grid: &SearchGrid,
) -> Result<EstimateMaps> {
    let [rows, cols, n] = g.dims();
    let pg = Periodogram::new(meta, grid)?;
    if n != pg.n_images() {
        return Err(Error::ShapeMismatch(format!(
            "stack has {n} images, geometry has {}",
            pg.n_images()
        )));
    }
    let pixels = rows * cols;
    let estimates: Vec<PixelEstimate> = (0..pixels)
        .into_par_iter()
        .map(|q| {
            let fiber: Vec<Complex64> = (0..n).map(|l| g.as_slice()[q + pixels * l]).collect();
            pg.estimate(&fiber)
        })
        .collect::<Result<_>>()?;
    let pick = |f: fn(&PixelEstimate) -> f64| {
        RealGrid::from_vec(rows, cols, estimates.iter().map(f).collect())
    };
    Ok(EstimateMaps {
        elevation: pick(|e| e.elevation)?,
        deformation: pick(|e| e.deformation)?,
        objective: pick(|e| e.peak)?,
        status: estimates.iter().map(|e| e.status).collect(),
    })
}

/// Mean of `angle(a ⊙ conj(b))²` over all entries, in rad².
pub fn residual_phase_mse(a: &ComplexTensor3, b: &ComplexTensor3) -> Result<f64> {
    a.check_same_shape(b)?;
    let sum: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| principal_angle(x * y.conj()).powi(2))
        .sum();
    Ok(sum / a.len() as f64)
}

/// Bias and standard deviation of estimate minus truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub sd_deformation: f64,
    pub bias_deformation: f64,
    pub sd_elevation: f64,
    pub bias_elevation: f64,
    pub valid_pixels: usize,
}

fn mean_sd(errors: &[f64]) -> (f64, f64) {
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Error statistics over the pixels whose status is not
/// [`PixelStatus::Invalid`]. `None` when no pixel qualifies. The standard
/// deviation is the population one.
pub fn map_error_stats(est: &EstimateMaps, truth: &GeoMaps) -> Result<Option<ErrorStats>> {
    let shape = truth.shape();
    if est.elevation.shape() != shape
        || est.deformation.shape() != shape
        || est.status.len() != shape.0 * shape.1
    {
        return Err(Error::ShapeMismatch(format!(
            "estimates {:?} vs truth {:?}",
            est.elevation.shape(),
            shape
        )));
    }
    let valid: Vec<usize> = (0..est.status.len())
        .filter(|&q| est.status[q] != PixelStatus::Invalid)
        .collect();
    if valid.is_empty() {
        return Ok(None);
    }
    let diff = |a: &RealGrid, b: &RealGrid| -> Vec<f64> {
        valid
            .iter()
            .map(|&q| a.as_slice()[q] - b.as_slice()[q])
            .collect()
    };
    let (bias_d, sd_d) = mean_sd(&diff(&est.deformation, &truth.deformation));
    let (bias_e, sd_e) = mean_sd(&diff(&est.elevation, &truth.elevation));
    Ok(Some(ErrorStats {
        sd_deformation: sd_d,
        bias_deformation: bias_d,
        sd_elevation: sd_e,
        bias_elevation: bias_e,
        valid_pixels: valid.len(),
    }))
}
