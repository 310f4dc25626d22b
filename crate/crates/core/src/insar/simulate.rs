//! Synthetic phase stacks: map generation, noise and outlier injection.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RealGrid;
use crate::insar::model::{model_phase_tensor, GeoMaps, StackMetadata};
use crate::tensor::{ComplexTensor3, Dims3};

/// Spatial layout of the synthetic maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapPattern {
    /// City grid of rectangular buildings. Each building takes one of four
    /// (elevation, deformation) level pairs chosen so that the two maps are
    /// uncorrelated; the ground between buildings carries a smooth, weak
    /// deformation field.
    Blocks,
    /// Same buildings, with deformation following elevation plus a smooth
    /// field.
    Correlated,
    /// Caller-provided maps, used as is.
    UserSupplied { maps: GeoMaps },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub dims: Dims3,
    /// Per-entry SNR; `inf` disables noise.
    pub snr_db: f64,
    /// Fraction of tensor entries replaced by random phasors, in `[0, 1)`.
    pub outlier_fraction: f64,
    /// Metres.
    pub elevation_range: (f64, f64),
    /// mm/year (linear motion) or mm (seasonal amplitude).
    pub deformation_range: (f64, f64),
    pub pattern: MapPattern,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dims: [128, 128, 25],
            snr_db: 5.0,
            outlier_fraction: 0.3,
            elevation_range: (-50.0, 50.0),
            deformation_range: (-15.0, 15.0),
            pattern: MapPattern::Blocks,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "dims must be positive, got {:?}",
                self.dims
            )));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!(
                "invalid snr_db {}",
                self.snr_db
            )));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(Error::InvalidArgument(format!(
                "outlier_fraction must lie in [0, 1), got {}",
                self.outlier_fraction
            )));
        }
        for (name, (lo, hi)) in [
            ("elevation_range", self.elevation_range),
            ("deformation_range", self.deformation_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a finite (min, max) pair, got ({lo}, {hi})"
                )));
            }
        }
        if let MapPattern::UserSupplied { maps } = &self.pattern {
            if maps.shape() != (self.dims[0], self.dims[1]) {
                return Err(Error::ShapeMismatch(format!(
                    "supplied maps are {:?}, stack is {}x{}",
                    maps.shape(),
                    self.dims[0],
                    self.dims[1]
                )));
            }
        }
        Ok(())
    }

    /// Per-entry noise variance `10^(−snr/10)`.
    pub fn noise_variance(&self) -> f64 {
        if self.snr_db == f64::INFINITY {
            0.0
        } else {
            10f64.powf(-self.snr_db / 10.0)
        }
    }
}

/// Layout constants of the city grid.
const GRID_BLOCKS: usize = 10;
const STREET_FRACTION: f64 = 0.1;
const EMPTY_LOT_PROBABILITY: f64 = 0.1;
/// Building levels as fractions of the half spans around the range centres.
const ELEVATION_LEVELS: [f64; 4] = [-1.0, -0.4, 0.4, 1.0];
const DEFORMATION_LEVELS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
/// Amplitude of the ground deformation field relative to the half span.
const GROUND_DEFORMATION: f64 = 0.1;

fn centre_and_half(range: (f64, f64)) -> (f64, f64) {
    ((range.0 + range.1) / 2.0, (range.1 - range.0) / 2.0)
}

/// Smooth bump plus ramp, scaled to peak magnitude one.
fn smooth_field(rows: usize, cols: usize) -> RealGrid {
    let raw = RealGrid::from_fn(rows, cols, |i, j| {
        let y = i as f64 / rows as f64;
        let x = j as f64 / cols as f64;
        (-((x - 0.35).powi(2) + (y - 0.6).powi(2)) / 0.05).exp() + 0.5 * (x - 0.5)
    });
    let mid = (raw.max() + raw.min()) / 2.0;
    let half = (raw.max() - raw.min()) / 2.0;
    if half > 0.0 {
        raw.map(|v| (v - mid) / half)
    } else {
        raw.map(|_| 0.0)
    }
}

/// Building index per pixel (`None` for ground).
fn city_layout(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
    let mut labels = vec![None; rows * cols];
    let n = GRID_BLOCKS as f64;
    let h = (1.0 - STREET_FRACTION) / n;
    for r in 0..GRID_BLOCKS {
        for c in 0..GRID_BLOCKS {
            let empty = rng.random::<f64>() < EMPTY_LOT_PROBABILITY;
            let level = rng.random_range(0..ELEVATION_LEVELS.len());
            if empty {
                continue;
            }
            let r0 = (r as f64 + 0.5) / n - h / 2.0;
            let c0 = (c as f64 + 0.5) / n - h / 2.0;
            for j in 0..cols {
                let x = j as f64 / cols as f64;
                if x < c0 || x >= c0 + h {
                    continue;
                }
                for i in 0..rows {
                    let y = i as f64 / rows as f64;
                    if y >= r0 && y < r0 + h {
                        labels[i + rows * j] = Some(level);
                    }
                }
            }
        }
    }
    labels
}

/// Elevation and deformation maps for `cfg.pattern`, within the configured
/// ranges. The layout is drawn from `cfg.seed`.
pub fn generate_maps(cfg: &SimulationConfig) -> Result<GeoMaps> {
    cfg.validate()?;
    let (rows, cols) = (cfg.dims[0], cfg.dims[1]);
    if let MapPattern::UserSupplied { maps } = &cfg.pattern {
        return Ok(maps.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels = city_layout(rows, cols, &mut rng);
    let (s_mid, s_half) = centre_and_half(cfg.elevation_range);
    let (p_mid, p_half) = centre_and_half(cfg.deformation_range);
    let field = smooth_field(rows, cols);
    let (lo_p, hi_p) = cfg.deformation_range;

    let elevation = RealGrid::from_fn(rows, cols, |i, j| match labels[i + rows * j] {
        Some(k) => s_mid + s_half * ELEVATION_LEVELS[k],
        None => s_mid,
    });
    let deformation = match cfg.pattern {
        MapPattern::Blocks => RealGrid::from_fn(rows, cols, |i, j| match labels[i + rows * j] {
            Some(k) => p_mid + p_half * DEFORMATION_LEVELS[k],
            None => p_mid + p_half * GROUND_DEFORMATION * field.get(i, j),
        }),
        MapPattern::Correlated => RealGrid::from_fn(rows, cols, |i, j| {
            let s = if s_half > 0.0 {
                (elevation.get(i, j) - s_mid) / s_half
            } else {
                0.0
            };
            let v = p_mid + p_half * (0.8 * s + 0.2 * field.get(i, j));
            v.clamp(lo_p, hi_p)
        }),
        MapPattern::UserSupplied { .. } => unreachable!("handled above"),
    };
    GeoMaps::new(elevation, deformation)
}

/// A simulated stack and its ground truth.
#[derive(Clone, Debug)]
pub struct SimulatedStack {
    /// Observed tensor: clean + noise, with outliers substituted.
    pub noisy: ComplexTensor3,
    pub clean: ComplexTensor3,
    pub maps: GeoMaps,
    /// `true` where an entry was replaced by an outlier; same layout as the
    /// tensors.
    pub outlier_mask: Vec<bool>,
}

impl SimulatedStack {
    pub fn outlier_count(&self) -> usize {
        self.outlier_mask.iter().filter(|&&m| m).count()
    }
}

/// Seeded stream for noise and outliers, independent of the map layout.
fn noise_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Simulates `G = clean + n` with complex circular Gaussian noise of
/// per-entry variance `10^(−snr/10)`, then replaces `round(p · len)` entries,
/// chosen uniformly without replacement, by unit phasors with phase uniform
/// on `(−π, π]`.
pub fn simulate_stack(cfg: &SimulationConfig, meta: &StackMetadata) -> Result<SimulatedStack> {
    cfg.validate()?;
    meta.validate()?;
    if meta.n_images() != cfg.dims[2] {
        return Err(Error::ShapeMismatch(format!(
            "metadata has {} images, config expects {}",
            meta.n_images(),
            cfg.dims[2]
        )));
    }
    let maps = generate_maps(cfg)?;
    let clean = model_phase_tensor(&maps, meta)?;
    let mut rng = noise_rng(cfg.seed);

    let sd = (cfg.noise_variance() / 2.0).sqrt();
    let mut data = clean.as_slice().to_vec();
    if sd > 0.0 {
        for z in &mut data {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += Complex64::new(sd * re, sd * im);
        }
    }

    let n = data.len();
    let count = (cfg.outlier_fraction * n as f64).round() as usize;
    let mut mask = vec![false; n];
    let mut chosen = sample(&mut rng, n, count).into_vec();
    chosen.sort_unstable();
    for k in chosen {
        mask[k] = true;
        let phase = PI - rng.random_range(0.0..2.0 * PI);
        data[k] = Complex64::from_polar(1.0, phase);
    }

    Ok(SimulatedStack {
        noisy: ComplexTensor3::from_raw(cfg.dims, data),
        clean,
        maps,
        outlier_mask: mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(p: f64, snr: f64) -> (SimulationConfig, StackMetadata) {
        let cfg = SimulationConfig {
            dims: [32, 24, 9],
            snr_db: snr,
            outlier_fraction: p,
            seed: 17,
            ..SimulationConfig::default()
        };
        (cfg, StackMetadata::synthetic(9, 4))
    }

    #[test]
    fn noiseless_outlier_free_stack_is_clean() {
        let (cfg, meta) = small(0.0, f64::INFINITY);
        let s = simulate_stack(&cfg, &meta).unwrap();
        assert_eq!(s.noisy, s.clean);
        assert_eq!(s.outlier_count(), 0);
    }

    #[test]
    fn same_seed_same_stack() {
        let (cfg, meta) = small(0.3, 5.0);
        let a = simulate_stack(&cfg, &meta).unwrap();
        let b = simulate_stack(&cfg, &meta).unwrap();
        assert_eq!(a.noisy, b.noisy);
        assert_eq!(a.outlier_mask, b.outlier_mask);
        let other = SimulationConfig { seed: 18, ..cfg };
        assert_ne!(simulate_stack(&other, &meta).unwrap().noisy, a.noisy);
    }

    #[test]
    fn outliers_are_unit_phasors() {
        let (cfg, meta) = small(0.4, 5.0);
        let s = simulate_stack(&cfg, &meta).unwrap();
        for (z, &m) in s.noisy.as_slice().iter().zip(&s.outlier_mask) {
            if m {
                assert!((z.norm() - 1.0).abs() < 1e-12);
            }
        }
        let expected = (0.4 * s.noisy.len() as f64).round() as usize;
        assert_eq!(s.outlier_count(), expected);
    }

    #[test]
    fn zero_ranges_give_zero_maps() {
        let cfg = SimulationConfig {
            dims: [16, 16, 4],
            elevation_range: (0.0, 0.0),
            deformation_range: (0.0, 0.0),
            ..SimulationConfig::default()
        };
        let m = generate_maps(&cfg).unwrap();
        assert!(m.elevation.as_slice().iter().all(|&v| v == 0.0));
        assert!(m.deformation.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn correlated_maps_stay_in_range() {
        let cfg = SimulationConfig {
            pattern: MapPattern::Correlated,
            ..SimulationConfig::default()
        };
        let m = generate_maps(&cfg).unwrap();
        assert!(m.deformation.min() >= -15.0 && m.deformation.max() <= 15.0);
        assert!(m.elevation.min() >= -50.0 && m.elevation.max() <= 50.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SimulationConfig {
                outlier_fraction: 1.0,
                ..Default::default()
            },
            SimulationConfig {
                outlier_fraction: -0.1,
                ..Default::default()
            },
            SimulationConfig {
                dims: [0, 4, 4],
                ..Default::default()
            },
            SimulationConfig {
                elevation_range: (5.0, -5.0),
                ..Default::default()
            },
            SimulationConfig {
                snr_db: f64::NAN,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        let (cfg, _) = small(0.1, 5.0);
        assert!(simulate_stack(&cfg, &StackMetadata::synthetic(5, 1)).is_err());
    }
}
