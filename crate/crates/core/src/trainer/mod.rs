//! The semi-supervised training loop and its ablation variants.

mod config;
mod report;
mod run;
mod variant;

pub use config::{TrainConfig, Variant};
pub use report::{EvalRecord, RunReport, TestPredictions};
pub use run::{
    evaluate, run, run_with_observer, train, train_with_observer, Evaluation, StepOutcome,
    TrainOutcome, Trainer,
};
pub use variant::{variant_losses, BatchContext, Term};
