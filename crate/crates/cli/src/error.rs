use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Io(_) => 3,
            Self::Numerical(_) => 4,
        }
    }
}

impl From<torquill_core::Error> for CliError {
    fn from(e: torquill_core::Error) -> Self {
        use torquill_core::Error as E;
        match e {
            E::Io(_) | E::Format(_) => Self::Io(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
