//! Object-based InSAR phase stacks: the forward model, synthetic scenes and
//! noise/outlier injection.

pub mod model;
pub mod simulate;

pub use model::{model_phase_tensor, GeoMaps, MotionModel, StackMetadata};
pub use simulate::{generate_maps, simulate_stack, MapPattern, SimulatedStack, SimulationConfig};
