//! Scenario outputs: block counts over time, witness re-entry counters,
//! attack statistics, and final balances.

use serde::{Deserialize, Serialize};

use crate::sim::Algorithm;
use crate::types::NodeId;

/// Snapshot at a fixed simulated-minute boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub minute: u64,
    pub blocks: u64,
    /// Nodes that packaged exactly one block so far.
    pub witness_once: u64,
    /// Nodes that packaged more than one block so far.
    pub witness_more: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeTally {
    pub node: NodeId,
    pub value: u64,
}

/// Full record of one scenario run. The CSV projection keeps the fixed
/// column set; the JSON form mirrors everything.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scenario_id: String,
    pub algo: Algorithm,
    pub nodes: usize,
    pub minutes: f64,
    pub seed: u64,
    pub psi: u64,
    pub blocks: u64,
    pub witness_once: u64,
    pub witness_more: u64,
    pub forks_built: u64,
    pub forks_detected: u64,
    pub forks_adopted: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub packed_per_node: Vec<NodeTally>,
    pub final_balances: Vec<NodeTally>,
    pub mean_latency_ms: f64,
}

impl MetricsRecord {
    /// Checkpoint at the given minute, if recorded.
    pub fn checkpoint_at(&self, minute: u64) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.minute == minute)
    }
}

/// Derives once/more counters from per-node packaged-block counts.
pub fn once_more_counts<'a>(counts: impl Iterator<Item = &'a u64>) -> (u64, u64) {
    let mut once = 0;
    let mut more = 0;
    for &count in counts {
        match count {
            0 => {}
            1 => once += 1,
            _ => more += 1,
        }
    }
    (once, more)
}
