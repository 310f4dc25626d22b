//! Robust low-rank tensor decomposition for multipass InSAR phase stacks.
//!
//! The crate provides a dense complex 3-mode tensor type, HoSVD and the
//! robust ADMM decompositions (HoRPCA and its iteratively reweighted variant
//! RoMIO), an object-based phase stack simulator and a periodogram estimator
//! for elevation and deformation.
//!
//! Tensors are stored column-major: entry `(i, j, k)` of an `I1×I2×I3`
//! tensor lives at `i + I1·(j + I2·k)`.

pub mod decomp;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod grid;
pub mod insar;
pub mod io;
pub mod linalg;
pub mod report;
pub mod subset;
pub mod tensor;

pub use decomp::{
    decompose, horpca, hosvd, nst, nsvt, romio_decompose, truncate_hosvd, DecompositionResult,
    HosvdFactors, RomioConfig, Truncation,
};
pub use error::{Error, Result};
pub use estimator::{
    estimate_maps, map_error_stats, periodogram_pixel, residual_phase_mse, Axis, ErrorStats,
    EstimateMaps, Periodogram, PixelEstimate, PixelStatus, SearchGrid,
};
pub use experiment::{run_experiment, ExperimentSpec, Method};
pub use grid::RealGrid;
pub use insar::{
    generate_maps, model_phase_tensor, simulate_stack, GeoMaps, MapPattern, MotionModel,
    SimulatedStack, SimulationConfig, StackMetadata,
};
pub use subset::select_uniform_subset;
pub use tensor::{fold, unfold, ComplexTensor3, Dims3, RealTensor3, UnfoldedMatrix};

pub use faer::Mat;
pub use num_complex::Complex64;
