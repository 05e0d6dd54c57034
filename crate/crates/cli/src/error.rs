use thiserror::Error;

/// Exit status 1 for invalid input or missing upstream artifacts, 2 for
/// failures while running a valid command.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("missing {artifact}; run `postpop {producer}` first")]
    Missing {
        artifact: String,
        producer: &'static str,
    },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Missing { .. } => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn runtime(e: impl std::fmt::Display) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

impl From<postpop::corpus::CorpusError> for CliError {
    fn from(e: postpop::corpus::CorpusError) -> Self {
        use postpop::corpus::CorpusError::*;
        match e {
            Io { .. } => CliError::Runtime(e.to_string()),
            Parse { .. } | Invalid(_) | Config(_) => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
