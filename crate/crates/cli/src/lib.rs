//! Library side of the `dpower` command: configuration, CSV ingestion,
//! job dispatch and deterministic result records.

pub mod config;
pub mod ingest;
pub mod jobs;
pub mod record;

use thiserror::Error;

pub use config::{Job, JobConfig};
pub use ingest::ingest_csv;
pub use jobs::run_job;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] dpower::Error),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// Machine-readable error class.
    pub fn class(&self) -> &'static str {
        use dpower::Error as E;
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Io(_) => "io",
            CliError::Internal(_) => "internal",
            CliError::Core(e) => match e {
                E::InvalidParameter { .. } | E::DimensionMismatch(_) => "invalid_parameter",
                E::RankDeficient { .. } => "rank_deficient",
                E::Infeasible(_) => "infeasible",
                E::EstimateUndefined(_) => "estimate_undefined",
                E::Solver(_) => "solver",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "config" => 2,
            "invalid_parameter" => 3,
            "data" => 4,
            "infeasible" => 5,
            "estimate_undefined" => 6,
            "rank_deficient" => 7,
            "solver" => 8,
            "io" => 9,
            _ => 70,
        }
    }
}
