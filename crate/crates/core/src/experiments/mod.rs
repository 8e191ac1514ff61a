//! Configuration, random admissible pairs, stability sweeps and output.

pub mod commands;
pub mod config;
pub mod emit;
pub mod sampler;
pub mod sweep;

pub use config::{load_config, ExperimentConfig};
pub use emit::emit_results;
pub use sampler::sample_admissible_pair;
pub use sweep::{run_sweep, ExperimentRecord, SweepMode, SweepOutput};
