use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(qni_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<qni_core::Error> for CliError {
    fn from(e: qni_core::Error) -> Self {
        match e {
            qni_core::Error::InvalidConfig(m) => CliError::Config(m),
            qni_core::Error::UnknownMaterial(m) => CliError::Config(format!("unknown material `{m}`")),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}
