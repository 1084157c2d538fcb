use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(harqir::Error),

    #[error("infeasible: {0}")]
    Infeasible(harqir::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("output encoding failed: {0}")]
    Encode(String),

    #[error("self-test failed: {0} check(s) out of tolerance")]
    SelfTest(usize),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit status for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Io { .. } | CliError::Encode(_) => 5,
            CliError::SelfTest(_) => 6,
        }
    }
}

impl From<harqir::Error> for CliError {
    fn from(e: harqir::Error) -> Self {
        use harqir::Error as E;
        match e {
            E::InvalidSpec(_) | E::DegenerateCorrelation { .. } => CliError::Config(e.to_string()),
            E::Infeasible(_) => CliError::Infeasible(e),
            _ => CliError::Numerical(e),
        }
    }
}
