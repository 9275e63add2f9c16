use thiserror::Error;

/// Errors raised by the numerical core, data generation and training loop.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite logits")]
    NonFiniteLogits,
    #[error("invalid temperature {0}: must be > 0")]
    InvalidTemperature(f64),
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },
    #[error("numerical overflow in {0}")]
    NumericalOverflow(&'static str),
    #[error("{name} = {value} is out of range {bounds}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        bounds: &'static str,
    },
    #[error("invalid class prior: {0}")]
    InvalidPrior(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error(
        "could not place {classes} means with separation {separation} after {attempts} attempts"
    )]
    SeparationUnsatisfiable {
        classes: usize,
        separation: f64,
        attempts: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training aborted at step {step}: {reason}")]
    TrainingAborted { step: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_mismatch(expected: impl ToString, actual: impl ToString) -> Error {
    Error::ShapeMismatch {
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}
