use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or unusable input data.
    #[error("data error: {0}")]
    Data(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
