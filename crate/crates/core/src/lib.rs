//! Long-tailed semi-supervised learning on synthetic Gaussian-mixture tasks.
//!
//! The crate trains a small perceptron with FixMatch-style pseudo-labeling
//! and a family of prior-aligned extensions:
//!
//! - [`flexda`]: logit-adjusted supervised and consistency losses that
//!   target an EMA estimate of the unlabeled class prior, smoothed toward
//!   uniform on a schedule, plus temperature-scaled distillation of the
//!   low-confidence samples the pseudo-label mask rejects.
//! - [`trainer`]: the step loop and its ablation variants.
//! - [`data`]: tasks with exact Bayes posteriors, so learned scorers can be
//!   checked against the optimal labeled, unlabeled and balanced rules.
//! - [`eval`]: balanced accuracy, ECE/MCE, Friedman ranks.
//! - [`math`]: softmax, cross-entropy, the MLP and its analytic gradients.

pub mod data;
pub mod error;
pub mod eval;
pub mod flexda;
pub mod math;
pub mod trainer;

pub use data::{DataSplit, LongTailSpec, SyntheticTask};
pub use error::{Error, Result};
pub use flexda::{ClassPrior, DebiasSchedule, PriorTracker};
pub use math::{ClassifierState, OptimizerConfig};
pub use trainer::{RunReport, TrainConfig, Variant};
