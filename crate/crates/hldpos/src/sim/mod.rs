//! Deterministic scenario runner: throughput and centralization
//! experiments over PoW, DPoS, and HL-DPoS, with CSV/JSON export.

mod config;
mod export;
mod metrics;
mod scenario;
mod sweep;

pub use config::{AdversaryConfig, Algorithm, CurveChoice, MaliciousEntry, SimConfig};
pub use export::{csv_string, export_csv, export_json, import_json, json_string, CSV_HEADER};
pub use metrics::{once_more_counts, Checkpoint, MetricsRecord, NodeTally};
pub use scenario::run_scenario;
pub use sweep::{sweep_matrix, sweep_psi};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario config: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
    #[error(transparent)]
    Grouping(#[from] crate::grouping::GroupingError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}
