use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] repeaterlab::Error),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("csv: {0}")]
    Csv(String),
}

impl CliError {
    pub fn io(path: impl Into<String>, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Csv(e.to_string())
    }
}
