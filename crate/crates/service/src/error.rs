use std::path::{Path, PathBuf};

use hydrograph::aggregate::AggregateError;
use hydrograph::{AnalysisError, GraphError, IngestError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: IngestError },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error("{0}")]
    Invalid(String),
}

impl ServiceError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ServiceError::Io { path: path.to_path_buf(), source }
    }

    pub fn input(path: &Path, source: IngestError) -> Self {
        ServiceError::Input { path: path.to_path_buf(), source }
    }

    /// 2 for I/O failures, 1 for anything wrong with the data or the request.
    pub fn exit_code(&self) -> i32 {
        match self {
            ServiceError::Io { .. } => 2,
            ServiceError::Input { source, .. } if source.is_io() => 2,
            ServiceError::Analysis(AnalysisError::Ingest(e)) if e.is_io() => 2,
            _ => 1,
        }
    }
}
