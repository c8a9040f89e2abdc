use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config field {field}: {message}")]
    Config { field: String, message: String },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] ftcsim_core::Error),

    #[error("{0}")]
    Usage(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
