use std::fmt;

/// Failure of an experiment run, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or inconsistent configuration (exit 2).
    Config(String),
    /// A solver hit its iteration cap (exit 3).
    NonConvergence(String),
    /// Outputs were written but a checked invariant does not hold (exit 4).
    Invariant(String),
    /// Anything else, including I/O (exit 1).
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Other(_) => 1,
        }
    }

    pub(crate) fn config(e: ehpc_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::NonConvergence(m) => write!(f, "solver did not converge: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ehpc_core::Error> for CliError {
    fn from(e: ehpc_core::Error) -> Self {
        use ehpc_core::Error as E;
        match e {
            ref err if err.is_non_convergence() => CliError::NonConvergence(err.to_string()),
            E::InvalidParameter(_) | E::Domain(_) | E::InfeasibleAction { .. } => CliError::Config(e.to_string()),
            other => CliError::Other(other.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Other(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.into())
    }
}
