use std::fmt;

/// Failure of a command, classified by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad arguments or malformed input files; exit code 2.
    Usage(String),
    /// The numerics could not deliver a trustworthy result; exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<kapitza_core::Error> for CliError {
    fn from(e: kapitza_core::Error) -> Self {
        use kapitza_core::Error as E;
        match e {
            E::Domain { .. } | E::InvalidInput(_) | E::IncompatibleTau { .. } => {
                CliError::Usage(e.to_string())
            }
            E::NonConvergence { .. }
            | E::NonPhysical { .. }
            | E::NotNormalized { .. }
            | E::Truncation { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
