//! VRF-based sharding of nodes into groups.
//!
//! Each node's group is derived from its VRF output over the epoch counter,
//! so the assignment reshuffles every epoch and any third party holding the
//! proof can recompute it. Groups that end up with a single member are
//! merged into a pseudo-randomly chosen other group so every surviving
//! group can supply two distinct representatives.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde_json::json;
use thiserror::Error;

use crate::types::NodeId;
use crate::vrf::{self, CurveParams, KeyPair, Point, VrfError, VrfOutput, VrfProof};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupingError {
    #[error("node set must contain at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("group count must be at least 1")]
    ZeroGroups,
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error(transparent)]
    Vrf(#[from] VrfError),
}

/// A participating node: identity, VRF key material, token balance, stake
/// weight, and the simulation-only ground-truth honesty flag.
#[derive(Clone, Debug)]
pub struct NodeRecord {
    pub id: NodeId,
    pub keypair: KeyPair,
    pub balance: u64,
    pub stake: u64,
    pub honest: bool,
}

/// Verifiable evidence behind one node's group placement.
#[derive(Clone, Debug)]
pub struct GroupEvidence {
    pub output: VrfOutput,
    pub proof: VrfProof,
}

/// A partition of the node set into groups for one epoch.
///
/// Group indices are 1-based and contiguous; member lists are sorted by
/// node id. Immutable after construction.
#[derive(Clone, Debug)]
pub struct GroupAssignment {
    pub epoch: u64,
    groups: BTreeMap<u32, Vec<NodeId>>,
    node_to_group: BTreeMap<NodeId, u32>,
    evidence: BTreeMap<NodeId, GroupEvidence>,
}

impl GroupAssignment {
    /// Builds an assignment from explicit member lists (no VRF evidence);
    /// used by fixtures and by `merge_singletons`.
    pub fn from_parts(epoch: u64, groups: BTreeMap<u32, Vec<NodeId>>) -> Self {
        let mut node_to_group = BTreeMap::new();
        let mut sorted = BTreeMap::new();
        for (&g, members) in &groups {
            let mut members = members.clone();
            members.sort_unstable();
            for &node in &members {
                node_to_group.insert(node, g);
            }
            sorted.insert(g, members);
        }
        GroupAssignment {
            epoch,
            groups: sorted,
            node_to_group,
            evidence: BTreeMap::new(),
        }
    }

    /// Effective number of groups.
    pub fn group_count(&self) -> u32 {
        self.groups.len() as u32
    }

    pub fn group_of(&self, node: NodeId) -> Option<u32> {
        self.node_to_group.get(&node).copied()
    }

    pub fn members(&self, group: u32) -> &[NodeId] {
        self.groups.get(&group).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn groups(&self) -> impl Iterator<Item = (u32, &[NodeId])> {
        self.groups.iter().map(|(&g, m)| (g, m.as_slice()))
    }

    pub fn node_count(&self) -> usize {
        self.node_to_group.len()
    }

    pub fn evidence_for(&self, node: NodeId) -> Option<&GroupEvidence> {
        self.evidence.get(&node)
    }

    /// JSON dump: `{epoch, phi, nodes: [{node, group, vrf_output_hex, proof_hex}]}`.
    pub fn to_json(&self, params: &CurveParams) -> serde_json::Value {
        let nodes: Vec<_> = self
            .node_to_group
            .iter()
            .map(|(&node, &group)| {
                let (output_hex, proof_hex) = match self.evidence.get(&node) {
                    Some(ev) => (ev.output.to_hex(), ev.proof.to_hex(params)),
                    None => (String::new(), String::new()),
                };
                json!({
                    "node": node.0,
                    "group": group,
                    "vrf_output_hex": output_hex,
                    "proof_hex": proof_hex,
                })
            })
            .collect();
        json!({
            "epoch": self.epoch,
            "phi": self.group_count(),
            "nodes": nodes,
        })
    }
}

/// Bucket formula: `floor(u * phi) + 1`, clamped to `phi`. `u` is always
/// strictly below 1, so the clamp only guards float edge cases.
pub fn group_index_for(unit: f64, phi: u32) -> u32 {
    ((unit * phi as f64) as u32 + 1).min(phi)
}

fn epoch_input(epoch: u64) -> [u8; 8] {
    epoch.to_be_bytes()
}

/// Shards `nodes` into `phi` groups from their VRF outputs over the epoch
/// counter. May produce singleton groups; run [`merge_singletons`] next.
pub fn assign_groups(
    params: &CurveParams,
    nodes: &[NodeRecord],
    phi: u32,
    epoch: u64,
) -> Result<GroupAssignment, GroupingError> {
    if phi == 0 {
        return Err(GroupingError::ZeroGroups);
    }
    if nodes.len() < 2 {
        return Err(GroupingError::TooFewNodes(nodes.len()));
    }
    let input = epoch_input(epoch);
    let mut groups: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
    let mut node_to_group = BTreeMap::new();
    let mut evidence = BTreeMap::new();
    for node in nodes {
        if node_to_group.contains_key(&node.id) {
            return Err(GroupingError::DuplicateNode(node.id));
        }
        let (output, proof) = vrf::evaluate(params, &node.keypair, &input)?;
        let group = group_index_for(vrf::hash_to_unit(&output.0), phi);
        groups.entry(group).or_default().push(node.id);
        node_to_group.insert(node.id, group);
        evidence.insert(node.id, GroupEvidence { output, proof });
    }
    for members in groups.values_mut() {
        members.sort_unstable();
    }
    Ok(GroupAssignment {
        epoch,
        groups,
        node_to_group,
        evidence,
    })
}

/// Third-party check: verifies the proof and recomputes the group index a
/// node must occupy in epoch `epoch` under `phi` groups.
pub fn verify_group(
    params: &CurveParams,
    public_key: &Point,
    epoch: u64,
    output: &VrfOutput,
    proof: &VrfProof,
    phi: u32,
) -> Option<u32> {
    if !vrf::verify(params, public_key, &epoch_input(epoch), output, proof) {
        return None;
    }
    Some(group_index_for(vrf::hash_to_unit(&output.0), phi))
}

/// Merges singleton groups into pseudo-randomly chosen other groups and
/// renumbers the survivors contiguously from 1. Deterministic for a fixed
/// `rng_seed`.
pub fn merge_singletons(
    assignment: &GroupAssignment,
    rng_seed: &[u8],
) -> Result<GroupAssignment, GroupingError> {
    if assignment.node_count() < 2 {
        return Err(GroupingError::TooFewNodes(assignment.node_count()));
    }
    let mut groups: BTreeMap<u32, Vec<NodeId>> = assignment
        .groups
        .iter()
        .map(|(&g, m)| (g, m.clone()))
        .collect();
    let singletons: Vec<u32> = groups
        .iter()
        .filter(|(_, m)| m.len() == 1)
        .map(|(&g, _)| g)
        .collect();
    let seed = vrf::sha256_concat(&[b"hldpos-merge-singletons", rng_seed]);
    let mut rng = ChaCha12Rng::from_seed(seed);
    for g in singletons {
        // The group may have grown since (another singleton merged into it).
        if groups.get(&g).map(Vec::len) != Some(1) {
            continue;
        }
        let targets: Vec<u32> = groups.keys().copied().filter(|&t| t != g).collect();
        // node_count >= 2 guarantees at least one other group exists.
        let target = targets[rng.gen_range(0..targets.len())];
        let orphan = groups.remove(&g).expect("singleton present")[0];
        let members = groups.get_mut(&target).expect("target present");
        members.push(orphan);
        members.sort_unstable();
    }
    // Renumber survivors 1..=m in ascending original order.
    let mut renumbered = BTreeMap::new();
    let mut node_to_group = BTreeMap::new();
    for (new_index, (_, members)) in (1u32..).zip(groups) {
        for &node in &members {
            node_to_group.insert(node, new_index);
        }
        renumbered.insert(new_index, members);
    }
    Ok(GroupAssignment {
        epoch: assignment.epoch,
        groups: renumbered,
        node_to_group,
        evidence: assignment.evidence.clone(),
    })
}
