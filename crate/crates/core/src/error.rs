use thiserror::Error;

use crate::graph::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(ValidationReport),

    #[error("invalid local system: {0}")]
    InvalidLocalSystem(ValidationReport),

    /// An operation was called outside its domain (wrong ℰ configuration,
    /// non-unit weights for the classical formula, non-invertible series, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{what} = {requested} exceeds the cap of {limit}")]
    ResourceCap {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("u = {u} lies at or beyond the singularity radius {radius}")]
    Singularity { u: f64, radius: f64 },

    #[error("unknown graph family `{0}`")]
    UnknownFamily(String),

    #[error("invalid family parameter: {0}")]
    FamilyParameter(String),

    #[error("internal cross-check failed: {0}")]
    CrossCheck(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
