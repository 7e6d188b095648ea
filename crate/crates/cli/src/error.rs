use std::process::ExitCode;

use thiserror::Error;

/// Failure of one CLI run; each variant has its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },

    #[error("{0}")]
    Core(#[from] fracmax::Error),

    /// Some hard invariant failed; the artifacts were still written.
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 1 internal, 2 usage, 3 I/O, 4 malformed input, 5 parameter window,
    /// 6 solver, 7 verification.
    pub fn code(&self) -> u8 {
        use fracmax::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Verification(_) => 7,
            CliError::Core(e) => match e {
                E::Io(_) => 3,
                E::InvalidSpace(_) | E::Format(_) | E::Json(_) | E::Csv(_) => 4,
                E::Parameter(_) | E::AnnulusRange { .. } => 5,
                E::Solver(_) => 6,
                E::EmptyBall | E::Normalization(_) => 1,
            },
        }
    }

    pub fn exit(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

pub type CliResult<T> = Result<T, CliError>;
