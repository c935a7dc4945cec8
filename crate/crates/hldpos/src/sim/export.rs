//! CSV and JSON export with a fixed column schema and byte-stable output.

use std::fs;
use std::path::Path;

use crate::sim::{MetricsRecord, SimError};

pub const CSV_HEADER: &str = "scenario_id,algo,nodes,minutes,seed,psi,blocks,witness_once,\
witness_more,forks_built,forks_detected,forks_adopted";

/// Renders records as CSV: the fixed header plus one row per record.
pub fn csv_string(records: &[MetricsRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario_id,
            r.algo,
            r.nodes,
            r.minutes,
            r.seed,
            r.psi,
            r.blocks,
            r.witness_once,
            r.witness_more,
            r.forks_built,
            r.forks_detected,
            r.forks_adopted
        ));
    }
    out
}

pub fn export_csv(records: &[MetricsRecord], path: &Path) -> Result<(), SimError> {
    fs::write(path, csv_string(records)).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Full record as pretty JSON, newline-terminated.
pub fn json_string(record: &MetricsRecord) -> String {
    let mut out = serde_json::to_string_pretty(record).expect("record serializes");
    out.push('\n');
    out
}

pub fn export_json(record: &MetricsRecord, path: &Path) -> Result<(), SimError> {
    fs::write(path, json_string(record)).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn import_json(path: &Path) -> Result<MetricsRecord, SimError> {
    let text = fs::read_to_string(path).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| SimError::Config(e.to_string()))
}
