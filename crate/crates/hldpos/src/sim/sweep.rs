//! Parameter sweeps: the cooldown sweep and the algorithm x node-count x
//! duration matrix.

use crate::sim::{run_scenario, Algorithm, MetricsRecord, SimConfig, SimError};

/// Runs one scenario per cooldown value with a common seed.
pub fn sweep_psi(base: &SimConfig, psi_values: &[u64]) -> Result<Vec<MetricsRecord>, SimError> {
    let mut seen = std::collections::BTreeSet::new();
    for &psi in psi_values {
        if !seen.insert(psi) {
            return Err(SimError::Config(format!("duplicate psi value {psi}")));
        }
    }
    let mut records = Vec::with_capacity(psi_values.len());
    for &psi in psi_values {
        let mut config = base.clone();
        config.id = None;
        config.psi = Some(psi);
        records.push(run_scenario(&config)?);
    }
    Ok(records)
}

/// Cross-product sweep; one record per (algorithm, node count, duration)
/// cell, all with the given seed.
pub fn sweep_matrix(
    base: &SimConfig,
    algorithms: &[Algorithm],
    node_counts: &[usize],
    minutes_list: &[f64],
    seed: u64,
) -> Result<Vec<MetricsRecord>, SimError> {
    let mut records = Vec::new();
    for &algo in algorithms {
        for &nodes in node_counts {
            for &minutes in minutes_list {
                let mut config = base.clone();
                config.id = None;
                config.algo = algo;
                config.nodes = nodes;
                config.minutes = minutes;
                config.seed = seed;
                records.push(run_scenario(&config)?);
            }
        }
    }
    Ok(records)
}
