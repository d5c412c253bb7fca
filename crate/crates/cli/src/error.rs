use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config schema: {0}")]
    Schema(String),

    #[error("invalid config: {0}")]
    Invalid(String),

    #[error("{0}")]
    Io(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] nlsctl_core::Error),
}
