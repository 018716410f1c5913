use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read config {path}: {source}")]
    ConfigIo {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl HarnessError {
    /// 1 for usage and configuration problems, 2 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::ConfigIo { .. } | HarnessError::Parse(_) | HarnessError::Invalid(_) => 1,
            _ => 2,
        }
    }
}
