use thiserror::Error;

/// Errors surfaced by the toolkit. `Argument` and `Validation` indicate a bad
/// request (CLI exit code 2); the rest indicate that the numerics cannot be
/// carried out on the given grid (CLI exit code 3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("scale selection failed: {0}")]
    ScaleUnresolvable(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("precondition unmet: {0}")]
    Precondition(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// true when the error reflects bad user input rather than a numeric/domain failure
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Argument(_) | Error::Validation(_) | Error::Parse(_)
        )
    }
}
