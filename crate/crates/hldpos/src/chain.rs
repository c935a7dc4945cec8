//! Blocks, transactions, Merkle roots, longest-chain selection, and the
//! longest-chain verification mechanism that detects forks hiding
//! previously agreed transactions.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::types::{NodeId, Round};
use crate::vrf::sha256_concat;

macro_rules! hash_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub [u8; 32]);

        impl $name {
            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!(stringify!($name), "({})"), &self.to_hex()[..12])
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                let raw = hex::decode(&text).map_err(serde::de::Error::custom)?;
                let arr: [u8; 32] = raw
                    .try_into()
                    .map_err(|_| serde::de::Error::custom("expected 32 bytes"))?;
                Ok($name(arr))
            }
        }
    };
}

hash_newtype!(
    /// Content hash identifying a transaction.
    TxId
);
hash_newtype!(
    /// Header hash identifying a block.
    BlockHash
);
hash_newtype!(
    /// Merkle commitment to a block's transaction list.
    MerkleRoot
);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChainError {
    #[error("block at height {height} does not link to the chain tip")]
    LinkMismatch { height: u64 },
    #[error("expected height {expected}, got {got}")]
    HeightMismatch { expected: u64, got: u64 },
    #[error("merkle root mismatch at height {height}")]
    MerkleMismatch { height: u64 },
    #[error("header hash mismatch at height {height}")]
    HeaderHashMismatch { height: u64 },
    #[error("chains do not share a genesis block")]
    IncompatibleGenesis,
    #[error("received chain ({received} blocks) is not longer than local ({local})")]
    ReceivedNotLonger { local: usize, received: usize },
}

/// A token transfer. The id commits to every content field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxId,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub amount: u64,
    pub round: Round,
    pub nonce: u64,
}

impl Transaction {
    pub fn new(sender: NodeId, receiver: NodeId, amount: u64, round: Round, nonce: u64) -> Self {
        assert!(amount > 0, "transaction amount must be positive");
        let id = TxId(sha256_concat(&[
            b"tx",
            &sender.0.to_be_bytes(),
            &receiver.0.to_be_bytes(),
            &amount.to_be_bytes(),
            &round.to_be_bytes(),
            &nonce.to_be_bytes(),
        ]));
        Transaction {
            id,
            sender,
            receiver,
            amount,
            round,
            nonce,
        }
    }
}

/// Binary Merkle root over transaction ids in list order. Odd layers
/// duplicate their last node; the empty list maps to the all-zero sentinel.
pub fn merkle_root(txs: &[Transaction]) -> MerkleRoot {
    merkle_root_of_ids(&txs.iter().map(|t| t.id).collect::<Vec<_>>())
}

pub fn merkle_root_of_ids(ids: &[TxId]) -> MerkleRoot {
    if ids.is_empty() {
        return MerkleRoot([0u8; 32]);
    }
    let mut level: Vec<[u8; 32]> = ids.iter().map(|t| t.0).collect();
    if level.len() == 1 {
        return MerkleRoot(sha256_concat(&[&level[0], &level[0]]));
    }
    while level.len() > 1 {
        let mut next = Vec::with_capacity((level.len() + 1) / 2);
        for pair in level.chunks(2) {
            let right = pair.get(1).unwrap_or(&pair[0]);
            next.push(sha256_concat(&[&pair[0], right]));
        }
        level = next;
    }
    MerkleRoot(level[0])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    pub prev: BlockHash,
    pub producer: NodeId,
    pub merkle_root: MerkleRoot,
    pub txs: Vec<Transaction>,
    pub hash: BlockHash,
}

/// Producer id reserved for the network-wide genesis block.
pub const GENESIS_PRODUCER: NodeId = NodeId(u64::MAX);

impl Block {
    pub fn new(height: u64, prev: BlockHash, producer: NodeId, txs: Vec<Transaction>) -> Self {
        let merkle_root = merkle_root(&txs);
        let hash = Self::header_hash(height, &prev, producer, &merkle_root);
        Block {
            height,
            prev,
            producer,
            merkle_root,
            txs,
            hash,
        }
    }

    pub fn genesis() -> Self {
        Block::new(0, BlockHash([0u8; 32]), GENESIS_PRODUCER, Vec::new())
    }

    pub fn header_hash(
        height: u64,
        prev: &BlockHash,
        producer: NodeId,
        merkle_root: &MerkleRoot,
    ) -> BlockHash {
        BlockHash(sha256_concat(&[
            b"blk",
            &height.to_be_bytes(),
            &prev.0,
            &producer.0.to_be_bytes(),
            &merkle_root.0,
        ]))
    }

    /// Recomputes the Merkle root and header hash from content.
    pub fn check_integrity(&self) -> Result<(), ChainError> {
        if merkle_root(&self.txs) != self.merkle_root {
            return Err(ChainError::MerkleMismatch {
                height: self.height,
            });
        }
        let expected = Self::header_hash(self.height, &self.prev, self.producer, &self.merkle_root);
        if expected != self.hash {
            return Err(ChainError::HeaderHashMismatch {
                height: self.height,
            });
        }
        Ok(())
    }
}

/// A node's copy of the blockchain: hash-linked blocks from genesis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub owner: NodeId,
    blocks: Vec<Block>,
}

impl Chain {
    pub fn new(owner: NodeId) -> Self {
        Chain {
            owner,
            blocks: vec![Block::genesis()],
        }
    }

    /// Builds a chain from explicit blocks; the caller guarantees linkage
    /// (forks under construction use this, verification re-checks it).
    pub fn from_blocks(owner: NodeId, blocks: Vec<Block>) -> Self {
        assert!(!blocks.is_empty(), "a chain always contains genesis");
        Chain { owner, blocks }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain never empty")
    }

    pub fn tip_height(&self) -> u64 {
        self.tip().height
    }

    pub fn block_at(&self, height: u64) -> Option<&Block> {
        self.blocks.get(height as usize)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn genesis(&self) -> &Block {
        &self.blocks[0]
    }

    /// All transaction ids anywhere in the chain.
    pub fn all_txids(&self) -> BTreeSet<TxId> {
        self.blocks
            .iter()
            .flat_map(|b| b.txs.iter().map(|t| t.id))
            .collect()
    }

    pub fn contains_tx(&self, id: TxId) -> bool {
        self.blocks.iter().any(|b| b.txs.iter().any(|t| t.id == id))
    }

    /// Lowest height holding the given transaction.
    pub fn height_of_tx(&self, id: TxId) -> Option<u64> {
        self.blocks
            .iter()
            .find(|b| b.txs.iter().any(|t| t.id == id))
            .map(|b| b.height)
    }

    /// Validates hash links, heights, Merkle roots, and header hashes.
    pub fn validate_structure(&self) -> Result<(), ChainError> {
        for (i, block) in self.blocks.iter().enumerate() {
            if block.height != i as u64 {
                return Err(ChainError::HeightMismatch {
                    expected: i as u64,
                    got: block.height,
                });
            }
            block.check_integrity()?;
            if i > 0 && block.prev != self.blocks[i - 1].hash {
                return Err(ChainError::LinkMismatch {
                    height: block.height,
                });
            }
        }
        Ok(())
    }

    /// JSON Lines dump: one block per line.
    pub fn dump_jsonl(&self) -> String {
        let mut out = String::new();
        for block in &self.blocks {
            let line = json!({
                "height": block.height,
                "hash": block.hash.to_hex(),
                "prev": block.prev.to_hex(),
                "producer": block.producer.0,
                "merkle_root": block.merkle_root.to_hex(),
                "txids": block.txs.iter().map(|t| t.id.to_hex()).collect::<Vec<_>>(),
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

/// Appends a block after checking linkage, height, and integrity. On error
/// the chain is unchanged.
pub fn append_block(chain: &mut Chain, block: Block) -> Result<(), ChainError> {
    if block.height != chain.tip_height() + 1 {
        return Err(ChainError::HeightMismatch {
            expected: chain.tip_height() + 1,
            got: block.height,
        });
    }
    if block.prev != chain.tip().hash {
        return Err(ChainError::LinkMismatch {
            height: block.height,
        });
    }
    block.check_integrity()?;
    chain.blocks.push(block);
    Ok(())
}

/// Longest-chain rule with a first-seen tie break: the longer chain wins,
/// equal lengths keep the local chain.
pub fn select_longest<'a>(local: &'a Chain, received: &'a Chain) -> Result<&'a Chain, ChainError> {
    if local.genesis().hash != received.genesis().hash {
        return Err(ChainError::IncompatibleGenesis);
    }
    if received.len() > local.len() {
        Ok(received)
    } else {
        Ok(local)
    }
}

/// Transactions present in `local_blocks` but absent from every block of
/// `received`, by id.
pub fn diff_transactions(local_blocks: &[Block], received: &Chain) -> BTreeSet<TxId> {
    let received_ids = received.all_txids();
    local_blocks
        .iter()
        .flat_map(|b| b.txs.iter().map(|t| t.id))
        .filter(|id| !received_ids.contains(id))
        .collect()
}

/// Why a received chain was rejected.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectCause {
    /// Locally agreed transactions are absent from the whole received chain.
    MissingTransactions,
    /// The received chain fails link or Merkle integrity checks.
    Malformed { reason: String },
}

/// Details of a rejected chain: where it forked, which consensus
/// transactions it dropped, and both attribution targets (the producer of
/// the first divergent block and the broadcaster).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectReport {
    pub cause: RejectCause,
    pub fork_height: u64,
    pub offender: Option<NodeId>,
    pub broadcaster: NodeId,
    pub missing: BTreeSet<TxId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Reject(RejectReport),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

/// Longest-chain verification with the default confirmation depth of 1
/// (every local block holds consensus transactions).
pub fn verify_longest_chain(local: &Chain, received: &Chain) -> Result<Verdict, ChainError> {
    verify_longest_chain_with_depth(local, received, 1)
}

/// Longest-chain verification mechanism.
///
/// Finds the first height where the chains disagree, then checks that every
/// consensus transaction of the local chain from that height up (at least
/// `confirmation_depth` blocks deep) appears somewhere in the received
/// chain. A header-only disagreement (equal transaction sets, possibly
/// reordered) is accepted; any missing transaction rejects the chain and
/// attributes the fork to the producer of the first divergent block.
pub fn verify_longest_chain_with_depth(
    local: &Chain,
    received: &Chain,
    confirmation_depth: u64,
) -> Result<Verdict, ChainError> {
    if local.genesis().hash != received.genesis().hash {
        return Err(ChainError::IncompatibleGenesis);
    }
    if received.len() <= local.len() {
        return Err(ChainError::ReceivedNotLonger {
            local: local.len(),
            received: received.len(),
        });
    }
    if let Err(err) = received.validate_structure() {
        return Ok(Verdict::Reject(RejectReport {
            cause: RejectCause::Malformed {
                reason: err.to_string(),
            },
            fork_height: 0,
            offender: None,
            broadcaster: received.owner,
            missing: BTreeSet::new(),
        }));
    }
    // Step 1: lowest height where the block hashes differ.
    let fork_height = (1..=local.tip_height()).find(|&h| {
        let ours = local.block_at(h).expect("height in range");
        let theirs = received.block_at(h).expect("received longer");
        ours.hash != theirs.hash
    });
    let fork_height = match fork_height {
        None => return Ok(Verdict::Accept), // pure extension
        Some(h) => h,
    };
    // Steps 2-3: compare transaction content from the divergence up. The
    // scan covers the entire received chain so re-ordered transactions are
    // not flagged; only transactions absent everywhere count as hidden.
    let deepest_confirmed = local.tip_height().saturating_sub(confirmation_depth - 1);
    let consensus_blocks: Vec<Block> = local
        .blocks()
        .iter()
        .filter(|b| b.height >= fork_height && b.height <= deepest_confirmed)
        .cloned()
        .collect();
    let missing = diff_transactions(&consensus_blocks, received);
    if missing.is_empty() {
        return Ok(Verdict::Accept);
    }
    let offender = received.block_at(fork_height).map(|b| b.producer);
    Ok(Verdict::Reject(RejectReport {
        cause: RejectCause::MissingTransactions,
        fork_height,
        offender,
        broadcaster: received.owner,
        missing,
    }))
}
