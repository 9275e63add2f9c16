//! Distribution alignment toward an adaptively estimated, progressively
//! smoothed target prior.
//!
//! Every loss term in the training objective is a weighted cross-entropy
//! of `σ((f(x) + offset) / T)` against a target distribution; the
//! constructors here produce those `(target, offset, weight, T)` bundles
//! and [`crate::math::loss_gradients`] does the rest.

mod prior;
mod schedule;
mod targets;

pub use prior::{logit_offset, ClassPrior, PRIOR_EPSILON};
pub use schedule::{infer_temperature, smooth_prior, DebiasSchedule, PriorTracker};
pub use targets::{
    ccr_targets, confidence_mask, consistency_targets, kd_targets, supervised_targets,
    ConfidenceMask, MaskedBatchTargets,
};
