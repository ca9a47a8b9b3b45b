use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A level equation has no positive root for the requested intensity.
    #[error("no positive level solves the normalization for lambda = {lambda}; largest feasible lambda is {max_lambda}")]
    NoLevelRoot { lambda: f64, max_lambda: f64 },

    #[error("|r({lag})| = {value} is not below 1")]
    CorrelationOutOfRange { lag: u64, value: f64 },

    #[error("covariance table of length {len} queried at lag {lag} without zero_beyond")]
    TableOverrun { lag: u64, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("embedding distortion {distortion:e} exceeds {limit:e}; set allow_clipping to proceed")]
    ExcessiveDistortion { distortion: f64, limit: f64 },

    #[error("window [{start}, {end}) does not fit a path of length {len}")]
    WindowOutOfRange { start: i64, end: i64, len: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed input files or settings rather than
    /// by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Io(_) | Error::Json(_))
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
