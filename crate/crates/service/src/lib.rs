//! Command-line tool and HTTP API over hydrograph workspaces.

pub mod cli;
pub mod error;
pub mod http;
pub mod views;
pub mod workspace;

pub use error::ServiceError;
pub use workspace::Snapshot;
