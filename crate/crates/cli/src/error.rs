use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical precondition failed: {0}")]
    Numerical(harvester_core::Error),

    #[error("{0}")]
    NotSettled(harvester_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
            CliError::NotSettled(_) => 4,
        }
    }
}

impl From<harvester_core::Error> for CliError {
    fn from(e: harvester_core::Error) -> Self {
        if e.is_not_settled() {
            CliError::NotSettled(e)
        } else {
            CliError::Numerical(e)
        }
    }
}
