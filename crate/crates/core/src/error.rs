use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variants follow the failure classes the operations distinguish: bad
/// configuration, probe geometry, grid resolution, leakage/decay budgets,
/// degenerate fits and characteristic directions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("budget error: {0}")]
    Budget(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("characteristic direction: {0}")]
    Characteristic(String),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
