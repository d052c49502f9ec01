//! Configuration, Monte-Carlo sweeps, metrics and reporting.
//!
//! Sweeps pair realizations across estimators: for a given trial index every
//! variant sees the same channel, the same pilot noise and the same data
//! block, so A/B differences are not diluted by sampling noise.

mod config;
mod metrics;
mod report;
mod sweep;

pub use config::{default_gm, Config, Dims, SweepSection, DEFAULT_GM_COMPONENTS, DEFAULT_GM_SEED};
pub use metrics::{gram_spectrum_stats, matrix_hash, mean_stderr, nmse_ch, spectral_entropy, to_db, SpectrumStats};
pub use report::{comparison_table, parse_cells, read_cells};
pub use sweep::{
    run_sweep, trial_channel, trial_frame, CellSummary, RunRecord, SweepResult, SweepSpec, CSV_HEADER,
    GENIE_TAG, THREADS_ENV,
};
