//! Error type shared across the library, with exit-code mapping for the CLI.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid argument or configuration value.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A contact state with no stance legs or otherwise unsolvable support.
    #[error("infeasible contact state: {0}")]
    InfeasibleContact(String),

    /// The force-balance solver failed to converge.
    #[error("force balance did not converge ({context}); residual {residual:.3e}")]
    Solver { residual: f64, context: String },

    /// The Helmholtz-Hodge linear system could not be solved.
    #[error("decomposition failed: {0}")]
    Decomposition(String),

    /// A shape query fell outside the field grid.
    #[error("shape outside grid domain: {0}")]
    Domain(String),

    /// An enumeration exceeded its size guard.
    #[error("capacity guard tripped: {0}")]
    Capacity(String),

    /// A verification suite reported failures.
    #[error("verification failed: {0}")]
    Verification(String),

    /// Filesystem problems while reading or writing artifacts.
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed JSON artifact or config.
    #[error("JSON error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn json(path: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }

    /// Appends location context to solver and infeasibility errors so batch
    /// evaluations can report where in a sweep they failed.
    pub(crate) fn annotate(self, extra: impl std::fmt::Display) -> Self {
        match self {
            Error::Solver { residual, context } => Error::Solver {
                residual,
                context: format!("{context}; {extra}"),
            },
            Error::InfeasibleContact(context) => {
                Error::InfeasibleContact(format!("{context}; {extra}"))
            }
            other => other,
        }
    }

    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// numerical failures, 4 for verification failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Json { .. } => 2,
            Error::Verification(_) => 4,
            _ => 3,
        }
    }
}
