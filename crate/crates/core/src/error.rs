use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no unique stationary law")]
    NoUniqueStationaryLaw,
    #[error("degenerate stationary law")]
    DegenerateStationaryLaw,
    #[error("nonconvergent mean (horizon {horizon} exhausted)")]
    NonconvergentMean { horizon: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no finite strong uniform time")]
    NoFiniteStrongUniformTime,
    #[error("no monotone coupling under these parameters")]
    NoMonotoneCoupling,
    #[error("coalescence not found within limit {limit}")]
    CoalescenceNotFound { limit: u64 },
    #[error("degenerate stationary graph")]
    DegenerateStationaryGraph,
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by bad user input rather than a failed computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::InvalidArgument(_)
                | Error::Config(_)
                | Error::NoUniqueStationaryLaw
                | Error::DegenerateStationaryLaw
                | Error::DegenerateStationaryGraph
                | Error::NoMonotoneCoupling
                | Error::Json(_)
        )
    }
}
