use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("{what} did not converge (estimate {estimate:e}, error {abs_err:e})")]
    NoConvergence {
        what: &'static str,
        estimate: f64,
        abs_err: f64,
    },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("no sensitivity: {0}")]
    NoSensitivity(String),

    #[error("regime is not dominated by a single scale")]
    MixedRegime,

    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 2 for bad input, 3 for numerical failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid { .. }
            | Error::UnknownExperiment(_)
            | Error::Config(_)
            | Error::MixedRegime => 2,
            Error::NoConvergence { .. } | Error::Degenerate(_) | Error::NoSensitivity(_) => 3,
            Error::Io(_) => 1,
        }
    }
}
