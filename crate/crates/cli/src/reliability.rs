//! Reliability-diagram data for a finished run.

use std::path::Path;

use ltssl_core::eval::{bin_predictions, ReliabilityBins};

use crate::error::{CliError, Result};
use crate::metrics::{read_predictions, PREDICTIONS_SUFFIX, RUNS_DIR};

/// Bins the final test predictions of `run_id`, given as
/// `<experiment dir>/<run name>` relative to `root`, e.g.
/// `forward-lt/forward-adello-s1`.
pub fn export_reliability(root: &Path, run_id: &str, bins: usize) -> Result<ReliabilityBins> {
    let (experiment, run) = run_id.rsplit_once('/').ok_or_else(|| {
        CliError::UnknownRun(format!("{run_id} (expected <experiment dir>/<run name>)"))
    })?;
    let path = root
        .join(experiment)
        .join(RUNS_DIR)
        .join(format!("{run}{PREDICTIONS_SUFFIX}"));
    if !path.is_file() {
        return Err(CliError::UnknownRun(run_id.to_string()));
    }
    let test = read_predictions(&path)?;
    Ok(bin_predictions(&test.confidences, &test.correct(), bins)?)
}
