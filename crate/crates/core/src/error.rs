use thiserror::Error;

pub type Result<T> = std::result::Result<T, CfmmError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CfmmError {
    /// A trading function was evaluated outside the strictly positive orthant.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed caller input (length mismatch, negative amounts, bad prices).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Pool configuration problems, all of them at once.
    #[error("invalid pool config: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("trade rejected: {0}")]
    Rejected(String),
    #[error("not supported: {0}")]
    Unsupported(String),
    /// Root finding, bracketing or line search did not converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CfmmError {
    pub fn is_numerical(&self) -> bool {
        matches!(self, CfmmError::Numerical(_))
    }

    /// Same error kind with `ctx` prepended to the message.
    pub fn context(self, ctx: &str) -> Self {
        let wrap = |m: String| format!("{ctx}: {m}");
        match self {
            CfmmError::Domain(m) => CfmmError::Domain(wrap(m)),
            CfmmError::InvalidInput(m) => CfmmError::InvalidInput(wrap(m)),
            CfmmError::Config(ms) => CfmmError::Config(ms.into_iter().map(wrap).collect()),
            CfmmError::Rejected(m) => CfmmError::Rejected(wrap(m)),
            CfmmError::Unsupported(m) => CfmmError::Unsupported(wrap(m)),
            CfmmError::Numerical(m) => CfmmError::Numerical(wrap(m)),
            CfmmError::Io(m) => CfmmError::Io(wrap(m)),
        }
    }
}

impl From<std::io::Error> for CfmmError {
    fn from(e: std::io::Error) -> Self {
        CfmmError::Io(e.to_string())
    }
}

impl From<csv::Error> for CfmmError {
    fn from(e: csv::Error) -> Self {
        CfmmError::Io(e.to_string())
    }
}
