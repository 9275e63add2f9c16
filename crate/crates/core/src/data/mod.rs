//! Synthetic long-tailed tasks with closed-form Bayes posteriors.
//!
//! Classes are isotropic Gaussians sharing one covariance scale, so the
//! labeled and unlabeled splits differ only in their class marginals
//! (pure label shift) and every posterior is computable exactly.

mod augment;
mod export;
mod split;
mod task;

pub use augment::{
    strong_augment, strong_augment_batch, weak_augment, weak_augment_batch, AugmentConfig,
};
pub use export::write_split_csv;
pub use split::{lt_class_counts, sample_split, DataSplit, Diagnostics, LongTailSpec};
pub use task::{bayes_posterior, make_task, SyntheticTask};
