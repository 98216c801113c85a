//! Workload generation, synthetic datasets and episode emulation.

mod dataset;
mod episode;
mod load;

pub use dataset::{gen_synthetic_dataset, load_grid, SyntheticModelParams};
pub use episode::{
    emulate_state, noise_stream, read_trace_rows, run_episode, write_trace_rows, EpisodeSetup,
    ExperimentTrace, NoiseDraw, Schedule, TraceRow,
};
pub use load::{gen_load, LoadProfile, Variation};
