use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced across the grid codec, BP engine, and simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A point or cell offset falls outside the grid's supported extent.
    #[error("outside grid extent: {0}")]
    Extent(String),

    /// Malformed textual id or record.
    #[error("parse error: {0}")]
    Parse(String),

    /// Ids or beliefs from incompatible grid systems / resolutions were mixed.
    #[error("grid spec mismatch: {0}")]
    SpecMismatch(String),

    /// An operation received input it cannot produce a distribution from.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Scenario generation could not satisfy its constraints.
    #[error("scenario error: {0}")]
    Scenario(String),

    /// Invalid configuration value.
    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
