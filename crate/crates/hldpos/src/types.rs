//! Small domain newtypes shared across modules.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense integer identifier of a blockchain node.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for NodeId {
    fn from(v: u64) -> Self {
        NodeId(v)
    }
}

/// Round counter. Rounds are 1-based; round 0 never runs.
pub type Round = u64;
