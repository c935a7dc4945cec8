//! Scripted malicious witness behaviors and the long-range fork builder.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{Block, Chain, TxId};
use crate::types::{NodeId, Round};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("target transaction not found in the local chain")]
    TargetNotFound,
    #[error("activation range is empty: {from}..={to}")]
    EmptyActivation { from: Round, to: Round },
    #[error("collusion member {0} is not in the malicious node set")]
    ColluderNotMalicious(NodeId),
}

/// What a witness does when its packaging turn comes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Honest,
    /// Broadcast a longer fork that omits a transaction the node itself
    /// created earlier.
    HideOwnTxFork,
    /// Package a transaction set different from the shared pool prefix.
    WrongTx,
    /// Produce no block in the slot.
    Timeout,
    /// Publish a block whose Merkle commitment does not match its content.
    Tamper,
    /// Package correctly but never report other offenders.
    ColludeSilent,
}

/// Scripted behaviors: which nodes misbehave, how, and during which rounds.
/// The collusion group is the subset that shields offenders by staying
/// silent; it must be drawn from the malicious set.
#[derive(Clone, Debug, Default)]
pub struct AdversarySpec {
    kinds: BTreeMap<NodeId, Behavior>,
    pub from_round: Round,
    pub to_round: Round,
    /// Extra blocks a fork adds beyond the local tip.
    pub fork_extension: u64,
}

impl AdversarySpec {
    /// No malicious nodes at all.
    pub fn none() -> Self {
        AdversarySpec {
            kinds: BTreeMap::new(),
            from_round: 0,
            to_round: 0,
            fork_extension: 1,
        }
    }

    pub fn new(
        kinds: BTreeMap<NodeId, Behavior>,
        from_round: Round,
        to_round: Round,
    ) -> Result<Self, AdversaryError> {
        if from_round > to_round {
            return Err(AdversaryError::EmptyActivation {
                from: from_round,
                to: to_round,
            });
        }
        Ok(AdversarySpec {
            kinds,
            from_round,
            to_round,
            fork_extension: 1,
        })
    }

    pub fn is_malicious(&self, node: NodeId) -> bool {
        self.kinds
            .get(&node)
            .map(|b| *b != Behavior::Honest)
            .unwrap_or(false)
    }

    /// Nodes that never report: the silent colluders.
    pub fn collusion_group(&self) -> BTreeSet<NodeId> {
        self.kinds
            .iter()
            .filter(|(_, &b)| b == Behavior::ColludeSilent)
            .map(|(&n, _)| n)
            .collect()
    }

    pub fn malicious_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.kinds.keys().copied()
    }
}

/// Behavior of `node` in `round`: honest outside the spec or its activation
/// range, otherwise the configured kind.
pub fn plan_behavior(spec: &AdversarySpec, node: NodeId, round: Round) -> Behavior {
    if round < spec.from_round || round > spec.to_round {
        return Behavior::Honest;
    }
    spec.kinds.get(&node).copied().unwrap_or(Behavior::Honest)
}

/// Builds a long-range fork: shares the prefix below the target
/// transaction's height, rebuilds every higher block without the target,
/// and extends `extension` blocks past the local tip so the fork wins the
/// longest-chain rule. Links and Merkle roots are internally valid; only
/// the missing-transaction scan can tell the fork apart.
pub fn build_fork(
    attacker: NodeId,
    local: &Chain,
    target: TxId,
    extension: u64,
) -> Result<Chain, AdversaryError> {
    let fork_height = local.height_of_tx(target).ok_or(AdversaryError::TargetNotFound)?;
    let extension = extension.max(1);
    let mut blocks: Vec<Block> = local.blocks()[..fork_height as usize].to_vec();
    for original in &local.blocks()[fork_height as usize..] {
        let txs = original
            .txs
            .iter()
            .filter(|t| t.id != target)
            .cloned()
            .collect();
        let prev = blocks.last().expect("prefix includes genesis").hash;
        blocks.push(Block::new(original.height, prev, attacker, txs));
    }
    for _ in 0..extension {
        let tip = blocks.last().expect("nonempty");
        blocks.push(Block::new(tip.height + 1, tip.hash, attacker, Vec::new()));
    }
    Ok(Chain::from_blocks(attacker, blocks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{append_block, verify_longest_chain, Transaction, Verdict};

    fn tx_from(sender: u64, n: u64) -> Transaction {
        Transaction::new(NodeId(sender), NodeId(sender + 1), 5, 1, n)
    }

    fn spec_with(node: u64, behavior: Behavior, from: Round, to: Round) -> AdversarySpec {
        let mut kinds = BTreeMap::new();
        kinds.insert(NodeId(node), behavior);
        AdversarySpec::new(kinds, from, to).unwrap()
    }

    #[test]
    fn plan_defaults_to_honest() {
        let spec = spec_with(5, Behavior::Timeout, 2, 9);
        assert_eq!(plan_behavior(&spec, NodeId(1), 5), Behavior::Honest);
        assert_eq!(plan_behavior(&spec, NodeId(5), 5), Behavior::Timeout);
        assert_eq!(plan_behavior(&spec, NodeId(5), 1), Behavior::Honest);
        assert_eq!(plan_behavior(&spec, NodeId(5), 10), Behavior::Honest);
    }

    #[test]
    fn activation_range_must_be_nonempty() {
        let mut kinds = BTreeMap::new();
        kinds.insert(NodeId(1), Behavior::WrongTx);
        assert_eq!(
            AdversarySpec::new(kinds, 5, 3).unwrap_err(),
            AdversaryError::EmptyActivation { from: 5, to: 3 }
        );
    }

    #[test]
    fn collusion_group_is_the_silent_subset() {
        let mut kinds = BTreeMap::new();
        kinds.insert(NodeId(1), Behavior::HideOwnTxFork);
        kinds.insert(NodeId(2), Behavior::ColludeSilent);
        kinds.insert(NodeId(3), Behavior::ColludeSilent);
        let spec = AdversarySpec::new(kinds, 1, 10).unwrap();
        let collusion = spec.collusion_group();
        assert_eq!(collusion, BTreeSet::from([NodeId(2), NodeId(3)]));
        for member in collusion {
            assert!(spec.is_malicious(member));
        }
    }

    fn chain_of(blocks: u64, tx_at: u64, target: &Transaction) -> Chain {
        let mut chain = Chain::new(NodeId(0));
        for h in 1..=blocks {
            let mut txs = vec![tx_from(h, h)];
            if h == tx_at {
                txs.push(target.clone());
            }
            let block = Block::new(h, chain.tip().hash, NodeId(h), txs);
            append_block(&mut chain, block).unwrap();
        }
        chain
    }

    #[test]
    fn fork_shares_prefix_and_omits_target_everywhere() {
        let attacker = NodeId(77);
        let target = tx_from(77, 999);
        // Chain of length 10 (genesis + 9), target at height 7.
        let local = chain_of(9, 7, &target);
        let fork = build_fork(attacker, &local, target.id, 1).unwrap();
        assert_eq!(fork.len(), local.len() + 1);
        for h in 0..7u64 {
            assert_eq!(
                fork.block_at(h).unwrap().hash,
                local.block_at(h).unwrap().hash,
                "prefix must be shared at height {h}"
            );
        }
        assert!(!fork.contains_tx(target.id));
        assert!(local.contains_tx(target.id));
        for h in 7..=fork.tip_height() {
            assert_eq!(fork.block_at(h).unwrap().producer, attacker);
        }
        fork.validate_structure().unwrap();
    }

    #[test]
    fn fork_is_internally_valid_but_fails_verification() {
        let attacker = NodeId(77);
        let target = tx_from(77, 999);
        let local = chain_of(6, 3, &target);
        let fork = build_fork(attacker, &local, target.id, 1).unwrap();
        fork.validate_structure().unwrap();
        match verify_longest_chain(&local, &fork).unwrap() {
            Verdict::Reject(report) => {
                assert!(report.missing.contains(&target.id));
                assert_eq!(report.offender, Some(attacker));
            }
            Verdict::Accept => panic!("fork must be rejected"),
        }
    }

    #[test]
    fn fork_at_tip_rebuilds_only_the_tip() {
        let attacker = NodeId(8);
        let target = tx_from(8, 1);
        let local = chain_of(5, 5, &target);
        let fork = build_fork(attacker, &local, target.id, 1).unwrap();
        assert_eq!(fork.len(), 7);
        for h in 0..5u64 {
            assert_eq!(
                fork.block_at(h).unwrap().hash,
                local.block_at(h).unwrap().hash
            );
        }
        assert_ne!(
            fork.block_at(5).unwrap().hash,
            local.block_at(5).unwrap().hash
        );
    }

    #[test]
    fn fork_requires_existing_target() {
        let local = chain_of(4, 2, &tx_from(1, 1));
        let missing = tx_from(9, 9);
        assert_eq!(
            build_fork(NodeId(9), &local, missing.id, 1).unwrap_err(),
            AdversaryError::TargetNotFound
        );
    }
}
