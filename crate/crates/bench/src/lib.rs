//! Shared fixtures for the benchmarks.

use romio_core::{simulate_stack, SimulatedStack, SimulationConfig, StackMetadata};

/// Simulated stack at the default scenario settings, resized to `dims`.
pub fn stack(dims: [usize; 3], seed: u64) -> (SimulatedStack, StackMetadata) {
    let meta = StackMetadata::synthetic(dims[2], 0);
    let cfg = SimulationConfig {
        dims,
        seed,
        ..SimulationConfig::default()
    };
    (simulate_stack(&cfg, &meta).expect("valid fixture"), meta)
}
