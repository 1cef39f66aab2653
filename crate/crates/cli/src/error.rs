use izo_core::IzoError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status: 1 for configuration problems, 2 for numerical
    /// aborts. I/O failures count as configuration problems since they come
    /// from bad paths.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::Numerical(_) => 2,
        }
    }
}

impl From<IzoError> for CliError {
    fn from(e: IzoError) -> Self {
        match e {
            IzoError::NonFinite { .. }
            | IzoError::Overflow(_)
            | IzoError::Factorization { .. }
            | IzoError::Estimation(_) => Self::Numerical(e.to_string()),
            IzoError::Config(detail) => Self::Config(detail),
            other => Self::Config(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(std::io::Error::other(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
