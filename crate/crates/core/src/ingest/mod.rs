//! System configuration and job-record ingestion.

mod config;
mod jobs;

use thiserror::Error;

pub use config::{PartitionDef, SystemConfig, SystemConfigFile};
pub use jobs::{
    aggregate, aggregate_csv, ingest_jobs, ingest_jobs_with_details, read_jobs, Ingested,
    JobRecord, ProjectUsage, RowError, UsageTotal, DETAIL_COLUMNS, JOB_COLUMNS,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("missing required columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// Loads and validates a system configuration file.
pub fn load_config(path: impl AsRef<std::path::Path>) -> Result<SystemConfig, IngestError> {
    SystemConfig::load(path)
}
