use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Spec { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("run {run} failed: {source}")]
    Run {
        run: String,
        #[source]
        source: ltssl_core::Error,
    },
    #[error("unknown run `{0}`")]
    UnknownRun(String),
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] ltssl_core::Error),
}

impl CliError {
    /// 1 for anything wrong with the inputs, 2 when a training run or its
    /// outputs fail.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec { .. }
            | CliError::Config(_)
            | CliError::UnknownRun(_)
            | CliError::Malformed { .. } => 1,
            CliError::Run { .. } | CliError::Io { .. } | CliError::Csv(_) | CliError::Core(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
