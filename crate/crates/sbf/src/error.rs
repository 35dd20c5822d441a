use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error(transparent)]
    Core(#[from] sbf_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
    #[error("refusing to assemble {predicted} constraints (limit {limit})")]
    TooLarge { predicted: usize, limit: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use sbf_core::Error as E;
        match self {
            CliError::Io { .. } | CliError::Csv(_) | CliError::Usage(_) | CliError::TooLarge { .. } => 1,
            CliError::Core(E::Infeasible) => 2,
            CliError::Parse { .. } | CliError::Schema(_) => 4,
            CliError::Core(E::Solver(_) | E::Unbounded) => 5,
            CliError::Core(_) => 6,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
