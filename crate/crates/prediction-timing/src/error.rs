use thiserror::Error;

/// Crate-wide error type.
///
/// Domain violations (parameters outside their mathematical domain) are kept
/// distinct from capacity refusals (configurations whose estimated cost or
/// memory would be absurd) because the command-line front end maps them to
/// different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("variance must be strictly positive and finite, got {0}")]
    NonPositiveVariance(f64),

    #[error("expert quality q must lie strictly inside (0, 1), got {0}")]
    QualityOutOfRange(f64),

    #[error("time index must be at least 1")]
    ZeroTime,

    #[error("{what} must be {requirement}, got {value}")]
    OutOfDomain {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("horizon {horizon} is too small: {detail}")]
    HorizonTooSmall { horizon: usize, detail: &'static str },

    #[error("t = {t} is outside the solved range 1..={horizon}")]
    TimeOutOfRange { t: usize, horizon: usize },

    #[error("value grid for t = {t} was not stored; solve with store_full_grid set")]
    RowNotStored { t: usize },

    #[error("capacity exceeded: {detail}")]
    Capacity { detail: String },

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code for the command-line front end: 2 for domain errors,
    /// 3 for capacity refusals, 1 for I/O trouble.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Capacity { .. } => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
