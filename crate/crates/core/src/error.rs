use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error taxonomy shared by the library, the CLI and the C ABI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate dimension: {0}")]
    DegenerateDimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("outside the admissible domain: {0}")]
    Domain(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("combinatorial guard exceeded: {0}")]
    Guard(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for this error.
    ///
    /// 2 config/input, 3 infeasible or out-of-domain parameters,
    /// 4 precondition or guard violation, 5 solver non-convergence, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Input(_) | Error::Parameter(_) => 2,
            Error::Infeasible(_) | Error::Domain(_) => 3,
            Error::Precondition(_) | Error::Guard(_) | Error::DegenerateDimension(_) => 4,
            Error::NonConvergence(_) => 5,
            Error::Dimension(_) | Error::Contract(_) | Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
