use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RealGrid;
use crate::tensor::ComplexTensor3;

/// Temporal warping of the acquisition times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MotionModel {
    /// `τ = t` (years); deformation in mm/year.
    Linear,
    /// `τ = sin(2π(t − t0))`; deformation is an amplitude in mm.
    Seasonal { t0: f64 },
}

/// Acquisition geometry of a stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackMetadata {
    /// Radar wavelength (m).
    pub wavelength: f64,
    /// Slant range to the scene (m).
    pub range: f64,
    /// Perpendicular baselines, one per image (m).
    pub spatial_baselines: Vec<f64>,
    /// Acquisition times relative to the master (years).
    pub temporal_baselines: Vec<f64>,
    pub motion_model: MotionModel,
}

impl StackMetadata {
    pub const DEFAULT_WAVELENGTH: f64 = 0.031;
    pub const DEFAULT_RANGE: f64 = 700e3;
    pub const DEFAULT_BASELINE_SPAN: f64 = 500.0;
    pub const DEFAULT_TIME_SPAN: f64 = 2.0;

    /// X-band geometry with baselines drawn uniformly from ±250 m and
    /// acquisition times drawn uniformly over two years.
    pub fn synthetic(n_images: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = Self::DEFAULT_BASELINE_SPAN / 2.0;
        let spatial_baselines = (0..n_images)
            .map(|_| rng.random_range(-half..half))
            .collect();
        let temporal_baselines = (0..n_images)
            .map(|_| rng.random_range(0.0..Self::DEFAULT_TIME_SPAN))
            .collect();
        Self {
            wavelength: Self::DEFAULT_WAVELENGTH,
            range: Self::DEFAULT_RANGE,
            spatial_baselines,
            temporal_baselines,
            motion_model: MotionModel::Linear,
        }
    }

    pub fn n_images(&self) -> usize {
        self.spatial_baselines.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        if !(self.range.is_finite() && self.range > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "range must be positive, got {}",
                self.range
            )));
        }
        if self.spatial_baselines.len() != self.temporal_baselines.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} spatial vs {} temporal baselines",
                self.spatial_baselines.len(),
                self.temporal_baselines.len()
            )));
        }
        if self.spatial_baselines.is_empty() {
            return Err(Error::InvalidArgument("stack has no images".into()));
        }
        if self
            .spatial_baselines
            .iter()
            .chain(&self.temporal_baselines)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite baseline".into()));
        }
        Ok(())
    }

    /// Warped time `τ` per image.
    pub fn warped_time(&self) -> Vec<f64> {
        match self.motion_model {
            MotionModel::Linear => self.temporal_baselines.clone(),
            MotionModel::Seasonal { t0 } => self
                .temporal_baselines
                .iter()
                .map(|t| (2.0 * PI * (t - t0)).sin())
                .collect(),
        }
    }

    /// Phase per metre of elevation and metre of baseline: `4π / (λ r)`.
    pub fn elevation_factor(&self) -> f64 {
        4.0 * PI / (self.wavelength * self.range)
    }

    /// Phase per millimetre of deformation and unit of `τ`: `4π / λ · 1e-3`.
    pub fn deformation_factor(&self) -> f64 {
        4.0 * PI / self.wavelength * 1e-3
    }

    /// Per-image phase gradients `(a_l, c_l)` such that a scatterer with
    /// elevation `s` (m) and deformation `p` (mm) has phase
    /// `−(a_l · s + c_l · p)` in image `l`.
    pub fn phase_gradients(&self) -> (Vec<f64>, Vec<f64>) {
        let ka = self.elevation_factor();
        let kc = self.deformation_factor();
        (
            self.spatial_baselines.iter().map(|b| ka * b).collect(),
            self.warped_time().iter().map(|t| kc * t).collect(),
        )
    }

    /// Metadata restricted to the listed images.
    pub fn select_images(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&k| k >= self.n_images()) {
            return Err(Error::InvalidArgument(format!(
                "image index {bad} out of range for {} images",
                self.n_images()
            )));
        }
        Ok(Self {
            spatial_baselines: indices.iter().map(|&k| self.spatial_baselines[k]).collect(),
            temporal_baselines: indices
                .iter()
                .map(|&k| self.temporal_baselines[k])
                .collect(),
            ..self.clone()
        })
    }
}

/// Elevation (m) and deformation (mm/year or mm) maps of a scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoMaps {
    pub elevation: RealGrid,
    pub deformation: RealGrid,
}

impl GeoMaps {
    pub fn new(elevation: RealGrid, deformation: RealGrid) -> Result<Self> {
        if elevation.shape() != deformation.shape() {
            return Err(Error::ShapeMismatch(format!(
                "elevation {:?} vs deformation {:?}",
                elevation.shape(),
                deformation.shape()
            )));
        }
        Ok(Self {
            elevation,
            deformation,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.elevation.shape()
    }
}

/// Noise-free phase tensor of a scene:
/// `exp{−j(4π/(λr) · S ⊗ b + 4π/λ · P ⊗ τ)}` with `P` converted from
/// millimetres to metres.
pub fn model_phase_tensor(maps: &GeoMaps, meta: &StackMetadata) -> Result<ComplexTensor3> {
    meta.validate()?;
    let (rows, cols) = maps.shape();
    if maps.deformation.shape() != (rows, cols) {
        return Err(Error::ShapeMismatch("map shapes differ".into()));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("empty maps".into()));
    }
    let (a, c) = meta.phase_gradients();
    ComplexTensor3::from_fn([rows, cols, meta.n_images()], |i, j, l| {
        let phase = -(a[l] * maps.elevation.get(i, j) + c[l] * maps.deformation.get(i, j));
        Complex64::from_polar(1.0, phase)
    })
}
