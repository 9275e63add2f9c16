//! Experiment front-end for `ltssl-core`: TOML experiment specs, parallel
//! sweeps with per-run CSV metrics, seed-aggregated summaries with
//! Friedman ranks, and reliability-bin export.

pub mod error;
pub mod metrics;
pub mod reliability;
pub mod runner;
pub mod spec;
pub mod summary;

pub use error::{CliError, Result};
pub use metrics::MetricsRecord;
pub use reliability::export_reliability;
pub use runner::{run_experiment, ExperimentOutcome, RunOptions};
pub use spec::{parse_spec, ExperimentSpec};
pub use summary::{rank_rows, read_summary, summarize, SummaryRow};
