//! Experiment harness for the spikebench simulator: IDX dataset
//! ingestion, toy model generation, deletion/jitter sweep orchestration
//! and CSV result emission. The `spikebench` binary is a thin wrapper
//! over this library.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod idx;
pub mod toy;

pub use error::{HarnessError, Result};
pub use experiment::{
    build_coding, load_base_model, parse_csv, read_csv, rows_to_csv, run_point, run_sweep,
    trials_for_point, write_csv, ExperimentConfig, ResultRow, ScaleMode, CSV_HEADER,
};
pub use idx::{load_idx, parse_idx_images, parse_idx_labels, save_idx_images, save_idx_labels, Dataset};
pub use toy::{generate_toy_model, parse_layer_spec, ACTIVATION_TARGET};

/// Environment variable capping the worker pool used for sweep grids.
pub const THREADS_ENV: &str = "SPIKEBENCH_THREADS";

/// Initialize the global worker pool from `SPIKEBENCH_THREADS` if set.
pub fn init_thread_pool() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
