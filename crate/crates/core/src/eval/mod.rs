//! Balanced accuracy, calibration error, prior-tracking diagnostics and
//! Friedman ranking.

mod calibration;
mod friedman;
mod metrics;

pub use calibration::{
    bin_predictions, ece, mce, write_bins_csv, Bin, ReliabilityBins, DEFAULT_BINS,
};
pub use friedman::{friedman_rank, FriedmanRanking, ScoreTable};
pub use metrics::{balanced_accuracy, prior_kl_trace, PriorKl};
