use serde::{Deserialize, Serialize};

use super::config::Variant;

/// Metrics recorded at one evaluation point. Loss and mask-rate columns are
/// means over the training steps since the previous evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: u64,
    pub loss_total: f64,
    pub loss_supervised: f64,
    pub loss_consistency: f64,
    pub loss_complementary: f64,
    pub mask_rate: f64,
    pub complementary_rate: f64,
    pub alpha: f64,
    pub temperature: f64,
    /// `KL(Q̂ ‖ Q)`; only with diagnostics enabled.
    pub kl_to_truth: Option<f64>,
    /// `KL(Q̂ ‖ P_bal)`
    pub kl_to_uniform: Option<f64>,
    pub prior_estimate: Vec<f64>,
    pub balanced_accuracy: f64,
    pub ece: f64,
    pub mce: f64,
}

/// Test-set outputs of the final evaluation network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPredictions {
    pub labels: Vec<usize>,
    pub predictions: Vec<usize>,
    pub confidences: Vec<f64>,
}

impl TestPredictions {
    pub fn correct(&self) -> Vec<bool> {
        self.labels
            .iter()
            .zip(&self.predictions)
            .map(|(y, p)| y == p)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: Variant,
    pub seed: u64,
    pub records: Vec<EvalRecord>,
    /// Mean over the last `final_window` records.
    pub final_balanced_accuracy: f64,
    pub final_ece: f64,
    pub final_mce: f64,
    pub test: TestPredictions,
}

impl RunReport {
    /// Means of `f` over the trailing `window` records.
    pub fn trailing_mean(
        records: &[EvalRecord],
        window: usize,
        f: impl Fn(&EvalRecord) -> f64,
    ) -> f64 {
        let tail = &records[records.len().saturating_sub(window)..];
        if tail.is_empty() {
            return f64::NAN;
        }
        tail.iter().map(f).sum::<f64>() / tail.len() as f64
    }
}
