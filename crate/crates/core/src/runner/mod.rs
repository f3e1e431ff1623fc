//! Experiment orchestration: configuration, training runs, learning-rate
//! search, CSV persistence, summaries and plots.

mod config;
pub mod csv;
mod objective;
pub mod plot;
mod search;
pub mod summary;
mod train;

pub use config::{
    default_epochs, default_learning_rate, format_entries, parse_entries, read_entries, ArchChoice, ExperimentConfig,
    DIVERGENCE_THRESHOLD,
};
pub use csv::{format_run_csv, load_runs, parse_run_csv, read_run, read_run_csv, run_file_stem, write_run, write_run_csv, RUN_CSV_HEADER};
pub use plot::emit_plots;
pub use search::{format_best_lr, format_grid_csv, grid_search, CandidateResult, GridSearchOutcome, GridSearchSpec, NO_VIABLE_LR};
pub use summary::{summarize, write_summary, SummaryRow, DIVERGED_MARKER, SUMMARY_HEADER};
pub use train::{run_batch, run_batch_with, run_key, run_many, run_single, run_with, RunOptions, Session};
