use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// No reduction branch accepts the given parameters.
    #[error("no reduction applies: {0}")]
    NoReduction(String),

    /// A scaling fit was requested over certificates that include
    /// numerically ambiguous instances.
    #[error("indeterminate certificates poison the fit at n = {0:?}")]
    IndeterminateFit(Vec<u32>),

    /// Calibration search exhausted its bounds without reaching the target.
    #[error("calibration target unreachable: {0}")]
    Calibration(String),

    /// The LP solver failed in a way that should not happen on well-posed
    /// certifier programs.
    #[error("LP solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
