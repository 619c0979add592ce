use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Numeric(#[from] roompass_core::Error),

    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Parameter errors from the core are configuration errors.
    pub fn invalid(e: roompass_core::Error) -> Self {
        use roompass_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::ConstraintViolated { .. } | E::OutOfRange(_) | E::NotRepresentable { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numeric(other),
        }
    }

    /// Exit status: 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
