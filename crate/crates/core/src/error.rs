use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsgError {
    #[error("halfspace id {0} does not resolve in the scene")]
    UnknownHalfspace(u32),
    #[error("duplicate halfspace id {0}")]
    DuplicateHalfspace(u32),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("scene has {0} halfspaces; at most {max} are supported", max = crate::MAX_HALFSPACES)]
    TooManyHalfspaces(usize),
    #[error("capacity exceeded: {what} is {actual}, limit {limit}")]
    Capacity {
        what: &'static str,
        actual: usize,
        limit: usize,
    },
    #[error("set cover element {0} is not covered by any subset")]
    Uncoverable(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("external minimizer failed: {0}")]
    External(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CsgError {
    pub fn is_capacity(&self) -> bool {
        matches!(self, CsgError::Capacity { .. })
    }
}

pub type Result<T, E = CsgError> = std::result::Result<T, E>;
