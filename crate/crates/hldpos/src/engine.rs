//! The HL-DPoS round state machine: packaging in witness-list order, the
//! report/adjudicate/punish economy, rewards, stake checks, and node-cycle
//! rotation. Also hosts the PoW and plain-DPoS baseline models used by the
//! simulator.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{self, AdversaryError, AdversarySpec, Behavior};
use crate::chain::{
    append_block, merkle_root, verify_longest_chain_with_depth, Block, Chain, ChainError,
    Transaction, TxId, Verdict,
};
use crate::election::{
    build_witness_list, select_random_rep, select_voted_rep, tally_votes, Ballot, CooldownLedger,
    ElectionError, GroupPicks, Provenance, Window, WitnessList,
};
use crate::grouping::GroupAssignment;
use crate::types::{NodeId, Round};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid engine config: {0}")]
    Config(String),
    #[error(transparent)]
    Election(#[from] ElectionError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
}

/// Token economy and packaging parameters.
///
/// `token_r >= token_v` (packagers earn at least what their voters earn)
/// and `penalty_pv < penalty_pa` (voters are fined less than offenders).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub token_r: u64,
    pub token_v: u64,
    pub penalty_pa: u64,
    pub penalty_pv: u64,
    pub slot_secs: f64,
    pub confirmation_depth: u64,
    pub block_capacity: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            token_r: 10,
            token_v: 2,
            penalty_pa: 50,
            penalty_pv: 10,
            slot_secs: 12.42,
            confirmation_depth: 1,
            block_capacity: 200,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.token_r < self.token_v {
            return Err(EngineError::Config(format!(
                "token_r ({}) must be >= token_v ({})",
                self.token_r, self.token_v
            )));
        }
        if self.penalty_pa == 0 {
            return Err(EngineError::Config("penalty_pa must be positive".into()));
        }
        if self.penalty_pv >= self.penalty_pa {
            return Err(EngineError::Config(format!(
                "penalty_pv ({}) must be < penalty_pa ({})",
                self.penalty_pv, self.penalty_pa
            )));
        }
        if !(self.slot_secs > 0.0) {
            return Err(EngineError::Config("slot_secs must be positive".into()));
        }
        if self.block_capacity == 0 {
            return Err(EngineError::Config("block_capacity must be positive".into()));
        }
        if self.confirmation_depth == 0 {
            return Err(EngineError::Config(
                "confirmation_depth must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Why a balance changed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaCause {
    PackReward,
    VoterReward,
    OffenderFine,
    SilentFine,
    VoterFine,
    ReporterBounty,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub round: Round,
    pub node: NodeId,
    /// Signed delta the rule asked for.
    pub requested: i64,
    /// Delta actually applied after clamping at zero.
    pub applied: i64,
    pub cause: DeltaCause,
}

/// Token balances with a full audit log. The engine never drives a balance
/// below zero: fines clamp and the shortfall stays visible in the log.
#[derive(Clone, Debug, Default)]
pub struct AccountBook {
    balances: BTreeMap<NodeId, u64>,
    pub audit: Vec<AuditEntry>,
}

impl AccountBook {
    pub fn with_balances(balances: BTreeMap<NodeId, u64>) -> Self {
        AccountBook {
            balances,
            audit: Vec::new(),
        }
    }

    pub fn balance(&self, node: NodeId) -> u64 {
        self.balances.get(&node).copied().unwrap_or(0)
    }

    pub fn balances(&self) -> &BTreeMap<NodeId, u64> {
        &self.balances
    }

    pub fn credit(&mut self, round: Round, node: NodeId, amount: u64, cause: DeltaCause) {
        let entry = self.balances.entry(node).or_insert(0);
        *entry += amount;
        self.audit.push(AuditEntry {
            round,
            node,
            requested: amount as i64,
            applied: amount as i64,
            cause,
        });
    }

    pub fn debit(&mut self, round: Round, node: NodeId, amount: u64, cause: DeltaCause) {
        let entry = self.balances.entry(node).or_insert(0);
        let applied = amount.min(*entry);
        *entry -= applied;
        self.audit.push(AuditEntry {
            round,
            node,
            requested: -(amount as i64),
            applied: -(applied as i64),
            cause,
        });
    }

    /// Replays the audit log over the given initial balances and checks the
    /// result matches the current balances exactly.
    pub fn replay_matches(&self, initial: &BTreeMap<NodeId, u64>) -> bool {
        let mut replay = initial.clone();
        for entry in &self.audit {
            let balance = replay.entry(entry.node).or_insert(0);
            if entry.applied >= 0 {
                *balance += entry.applied as u64;
            } else {
                let deducted = (-entry.applied) as u64;
                if deducted > *balance {
                    return false;
                }
                *balance -= deducted;
            }
        }
        replay
            .iter()
            .all(|(node, &bal)| self.balance(*node) == bal)
            && self.balances.iter().all(|(node, &bal)| {
                replay.get(node).copied().unwrap_or(0) == bal
            })
    }
}

/// Witness eligibility: the account must cover the offender fine.
pub fn stake_check(accounts: &AccountBook, node: NodeId, config: &EngineConfig) -> bool {
    accounts.balance(node) >= config.penalty_pa
}

/// Per-witness lifecycle inside one round. Statuses only move forward:
/// pending, then exactly one terminal outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessStatus {
    Pending,
    PackedGood,
    Faulted,
    Terminated,
    Kicked,
}

#[derive(Clone, Debug)]
pub struct RoundEntry {
    pub node: NodeId,
    pub group: u32,
    pub provenance: Provenance,
    pub status: WitnessStatus,
    /// Voters behind a voted representative; empty for random picks.
    pub voters: Vec<NodeId>,
}

/// Mutable round bookkeeping: the queue entries and the node-cycle tail of
/// finished packagers serving as inspectors.
#[derive(Clone, Debug)]
pub struct RoundState {
    pub round: Round,
    pub entries: Vec<RoundEntry>,
    /// Entry indices in cycling order; these occupy queue positions after
    /// the original list.
    pub tail: Vec<usize>,
}

impl RoundState {
    /// Queue position (1-based) of the tail inspector with the given order
    /// index.
    fn tail_position(&self, tail_index: usize) -> usize {
        self.entries.len() + tail_index + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    Late,
    WrongTx,
    DataTamper,
    HiddenOwnTxFork,
}

/// Evidence backing a fault; always nonempty by construction.
#[derive(Clone, Debug)]
pub enum Evidence {
    MissedSlot {
        height: u64,
    },
    BadBlock {
        block: Block,
        expected_txids: Vec<TxId>,
    },
    Fork {
        chain: Chain,
        fork_height: u64,
        missing: BTreeSet<TxId>,
    },
}

#[derive(Clone, Debug)]
pub struct FaultRecord {
    /// 1-based queue position of the offender.
    pub position: usize,
    pub offender: NodeId,
    pub kind: FaultKind,
    pub evidence: Evidence,
    pub reported: bool,
}

/// A filed report: reporter at queue position `k`, offender at `j < k`.
#[derive(Clone, Debug, Serialize)]
pub struct MaliciousReport {
    pub reporter: NodeId,
    pub reporter_position: usize,
    pub offender: NodeId,
    pub offender_position: usize,
    pub kind: FaultKind,
    #[serde(skip)]
    pub fault_index: usize,
}

/// Applied punishment: fines, kicks, the reporter bounty `PA * (k - j)`,
/// and the successor that takes over packaging.
#[derive(Clone, Debug, Serialize)]
pub struct PunishmentOutcome {
    pub round: Round,
    pub offender: NodeId,
    pub offender_position: usize,
    pub reporter: NodeId,
    pub reporter_position: usize,
    pub kind: FaultKind,
    pub bounty: u64,
    pub fined_intermediates: Vec<NodeId>,
    pub kicked: Vec<NodeId>,
    pub fined_voters: Vec<NodeId>,
    pub successor: Option<NodeId>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockSummary {
    pub height: u64,
    pub hash: String,
    pub producer: NodeId,
    pub tx_count: usize,
}

/// One packaging slot: who attempted it and the block height produced, if
/// any. Slots elapse even when the witness faults.
#[derive(Clone, Debug)]
pub struct SlotEvent {
    pub position: usize,
    pub node: NodeId,
    pub produced: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct ForkEvent {
    pub attacker: NodeId,
    pub position: usize,
    pub detected: bool,
    pub adopted: bool,
}

/// Everything that happened in one round. The JSON form carries the round
/// id, blocks, reports, punishments, and balance deltas.
#[derive(Clone, Debug, Serialize)]
pub struct RoundReport {
    pub round: Round,
    pub blocks: Vec<BlockSummary>,
    pub reports: Vec<MaliciousReport>,
    pub punishments: Vec<PunishmentOutcome>,
    pub balance_deltas: Vec<AuditEntry>,
    #[serde(skip)]
    pub witness_list: WitnessList,
    #[serde(skip)]
    pub slot_events: Vec<SlotEvent>,
    #[serde(skip)]
    pub fork_events: Vec<ForkEvent>,
}

/// Inputs fed to one round: the epoch's group assignment, the cast ballots,
/// the adversary script, and the round's seed material.
pub struct RoundInputs<'a> {
    pub round: Round,
    pub assignment: &'a GroupAssignment,
    pub ballots: &'a [Ballot],
    pub adversary: &'a AdversarySpec,
    pub round_seed: &'a [u8],
}

/// The HL-DPoS consensus engine: canonical chain, account book, transaction
/// pool, cooldown ledger, and election policy.
pub struct ConsensusEngine {
    pub config: EngineConfig,
    pub accounts: AccountBook,
    pub chain: Chain,
    pub cooldowns: CooldownLedger,
    pub tx_pool: VecDeque<Transaction>,
    pub window: Window,
    /// Total representatives per group (half voted, half random).
    pub reps_per_group: u32,
}

impl ConsensusEngine {
    pub fn new(
        config: EngineConfig,
        initial_balances: BTreeMap<NodeId, u64>,
        cooldowns: CooldownLedger,
        window: Window,
        reps_per_group: u32,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        window.validate()?;
        if reps_per_group == 0 || reps_per_group % 2 != 0 {
            return Err(EngineError::Config(format!(
                "reps_per_group must be a positive even number, got {reps_per_group}"
            )));
        }
        Ok(ConsensusEngine {
            config,
            accounts: AccountBook::with_balances(initial_balances),
            chain: Chain::new(NodeId(u64::MAX)),
            cooldowns,
            tx_pool: VecDeque::new(),
            window,
            reps_per_group,
        })
    }

    pub fn submit_transaction(&mut self, tx: Transaction) {
        self.tx_pool.push_back(tx);
    }

    /// Pool prefix a correct packager must include, in FIFO order.
    fn expected_prefix(&self) -> Vec<Transaction> {
        self.tx_pool
            .iter()
            .take(self.config.block_capacity)
            .cloned()
            .collect()
    }

    /// Elects the witness list for one round: per group, half the
    /// representatives by windowed vote and half by seeded random draw,
    /// skipping under-staked nodes up front.
    fn elect(
        &mut self,
        inputs: &RoundInputs,
    ) -> Result<(WitnessList, BTreeMap<NodeId, Vec<NodeId>>), EngineError> {
        let round = inputs.round;
        let per_kind = (self.reps_per_group / 2).max(1) as usize;
        let understaked: BTreeSet<NodeId> = inputs
            .assignment
            .groups()
            .flat_map(|(_, members)| members.iter().copied())
            .filter(|&n| !stake_check(&self.accounts, n, &self.config))
            .collect();
        let mut ballots_by_group: BTreeMap<u32, Vec<Ballot>> = BTreeMap::new();
        for ballot in inputs.ballots {
            if let Some(group) = inputs.assignment.group_of(ballot.voter) {
                ballots_by_group.entry(group).or_default().push(*ballot);
            }
        }
        let mut picks = Vec::new();
        let mut voters_of: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (group, members) in inputs.assignment.groups() {
            let group_ballots: Vec<Ballot> =
                ballots_by_group.remove(&group).unwrap_or_default();
            let tally = tally_votes(&group_ballots, group, members)?;
            let mut exclusions = understaked.clone();
            let mut voted = Vec::with_capacity(per_kind);
            for _ in 0..per_kind {
                let pick =
                    select_voted_rep(&tally, self.window, &mut self.cooldowns, round, &exclusions)?;
                exclusions.insert(pick);
                voters_of.insert(
                    pick,
                    group_ballots
                        .iter()
                        .filter(|b| b.candidate == pick)
                        .map(|b| b.voter)
                        .collect(),
                );
                voted.push(pick);
            }
            let mut random = Vec::with_capacity(per_kind);
            for _ in 0..per_kind {
                let pick = select_random_rep(
                    members,
                    &exclusions,
                    &mut self.cooldowns,
                    round,
                    inputs.round_seed,
                    group,
                )?;
                exclusions.insert(pick);
                random.push(pick);
            }
            picks.push(GroupPicks {
                group,
                voted,
                random,
            });
        }
        Ok((build_witness_list(&picks, round)?, voters_of))
    }

    /// Runs one full round: election, the packaging loop with inspection
    /// and immediate adjudication, node cycling, and end-of-round rewards.
    /// Deterministic for fixed inputs.
    pub fn run_round(&mut self, inputs: &RoundInputs) -> Result<RoundReport, EngineError> {
        let round = inputs.round;
        let audit_start = self.accounts.audit.len();
        let (witness_list, voters_of) = self.elect(inputs)?;
        let mut state = RoundState {
            round,
            entries: witness_list
                .entries
                .iter()
                .map(|e| RoundEntry {
                    node: e.node,
                    group: e.group,
                    provenance: e.provenance,
                    status: WitnessStatus::Pending,
                    voters: voters_of.get(&e.node).cloned().unwrap_or_default(),
                })
                .collect(),
            tail: Vec::new(),
        };
        let mut faults: Vec<FaultRecord> = Vec::new();
        let mut reports = Vec::new();
        let mut punishments = Vec::new();
        let mut blocks = Vec::new();
        let mut slot_events = Vec::new();
        let mut fork_events = Vec::new();

        for idx in 0..state.entries.len() {
            if state.entries[idx].status != WitnessStatus::Pending {
                continue;
            }
            let node = state.entries[idx].node;
            let position = idx + 1;
            let behavior = adversary::plan_behavior(inputs.adversary, node, round);
            let mut produced = None;
            match behavior {
                Behavior::Honest | Behavior::ColludeSilent => {
                    let take = self.tx_pool.len().min(self.config.block_capacity);
                    let txs: Vec<Transaction> = self.tx_pool.drain(..take).collect();
                    let block =
                        Block::new(self.chain.tip_height() + 1, self.chain.tip().hash, node, txs);
                    let summary = BlockSummary {
                        height: block.height,
                        hash: block.hash.to_hex(),
                        producer: node,
                        tx_count: block.txs.len(),
                    };
                    produced = Some(block.height);
                    append_block(&mut self.chain, block)?;
                    blocks.push(summary);
                    state.entries[idx].status = WitnessStatus::PackedGood;
                    state.tail.push(idx);
                }
                Behavior::Timeout => {
                    state.entries[idx].status = WitnessStatus::Faulted;
                    faults.push(FaultRecord {
                        position,
                        offender: node,
                        kind: FaultKind::Late,
                        evidence: Evidence::MissedSlot {
                            height: self.chain.tip_height() + 1,
                        },
                        reported: false,
                    });
                }
                Behavior::WrongTx => {
                    let expected: Vec<TxId> =
                        self.expected_prefix().iter().map(|t| t.id).collect();
                    let mut wrong: Vec<Transaction> = self
                        .tx_pool
                        .iter()
                        .skip(1)
                        .take(self.config.block_capacity)
                        .cloned()
                        .collect();
                    if wrong.is_empty() && expected.is_empty() {
                        // Nothing in the pool: fabricate a transaction no one
                        // submitted so the set still differs.
                        wrong.push(Transaction::new(node, node, 1, round, u64::MAX - idx as u64));
                    }
                    let block = Block::new(
                        self.chain.tip_height() + 1,
                        self.chain.tip().hash,
                        node,
                        wrong,
                    );
                    state.entries[idx].status = WitnessStatus::Faulted;
                    faults.push(FaultRecord {
                        position,
                        offender: node,
                        kind: FaultKind::WrongTx,
                        evidence: Evidence::BadBlock {
                            block,
                            expected_txids: expected,
                        },
                        reported: false,
                    });
                }
                Behavior::Tamper => {
                    let txs = self.expected_prefix();
                    let expected: Vec<TxId> = txs.iter().map(|t| t.id).collect();
                    let mut root = merkle_root(&txs);
                    root.0[0] ^= 0xFF;
                    let hash = Block::header_hash(
                        self.chain.tip_height() + 1,
                        &self.chain.tip().hash,
                        node,
                        &root,
                    );
                    let block = Block {
                        height: self.chain.tip_height() + 1,
                        prev: self.chain.tip().hash,
                        producer: node,
                        merkle_root: root,
                        txs,
                        hash,
                    };
                    state.entries[idx].status = WitnessStatus::Faulted;
                    faults.push(FaultRecord {
                        position,
                        offender: node,
                        kind: FaultKind::DataTamper,
                        evidence: Evidence::BadBlock {
                            block,
                            expected_txids: expected,
                        },
                        reported: false,
                    });
                }
                Behavior::HideOwnTxFork => {
                    // Hide the most recent own transaction that reached
                    // consensus; with none available there is nothing to
                    // erase, so the attacker packs honestly this turn.
                    let target = self.latest_consensus_tx_from(node);
                    match target {
                        None => {
                            let take = self.tx_pool.len().min(self.config.block_capacity);
                            let txs: Vec<Transaction> = self.tx_pool.drain(..take).collect();
                            let block = Block::new(
                                self.chain.tip_height() + 1,
                                self.chain.tip().hash,
                                node,
                                txs,
                            );
                            let summary = BlockSummary {
                                height: block.height,
                                hash: block.hash.to_hex(),
                                producer: node,
                                tx_count: block.txs.len(),
                            };
                            produced = Some(block.height);
                            append_block(&mut self.chain, block)?;
                            blocks.push(summary);
                            state.entries[idx].status = WitnessStatus::PackedGood;
                            state.tail.push(idx);
                        }
                        Some(target) => {
                            let fork = adversary::build_fork(
                                node,
                                &self.chain,
                                target,
                                inputs.adversary.fork_extension,
                            )?;
                            let verdict = verify_longest_chain_with_depth(
                                &self.chain,
                                &fork,
                                self.config.confirmation_depth,
                            )?;
                            let (fork_height, missing) = match verdict {
                                Verdict::Reject(report) => (report.fork_height, report.missing),
                                // Unreachable by construction: the fork drops
                                // a consensus transaction.
                                Verdict::Accept => (fork.tip_height(), BTreeSet::new()),
                            };
                            state.entries[idx].status = WitnessStatus::Faulted;
                            faults.push(FaultRecord {
                                position,
                                offender: node,
                                kind: FaultKind::HiddenOwnTxFork,
                                evidence: Evidence::Fork {
                                    chain: fork,
                                    fork_height,
                                    missing,
                                },
                                reported: false,
                            });
                        }
                    }
                }
            }
            slot_events.push(SlotEvent {
                position,
                node,
                produced,
            });

            // Inspection: the first honest witness after this position files
            // a report for the newest fault; silence leaves it unreported.
            if state.entries[idx].status == WitnessStatus::Faulted {
                let fault_index = faults.len() - 1;
                match self.find_reporter(&state, idx, inputs.adversary, round) {
                    Some((reporter_position, reporter)) => {
                        let report = MaliciousReport {
                            reporter,
                            reporter_position,
                            offender: state.entries[idx].node,
                            offender_position: position,
                            kind: faults[fault_index].kind,
                            fault_index,
                        };
                        faults[fault_index].reported = true;
                        if let Some(outcome) =
                            self.adjudicate(&report, &faults[fault_index], &mut state)
                        {
                            if report.kind == FaultKind::HiddenOwnTxFork {
                                fork_events.push(ForkEvent {
                                    attacker: outcome.offender,
                                    position,
                                    detected: true,
                                    adopted: false,
                                });
                            }
                            punishments.push(outcome);
                        }
                        reports.push(report);
                    }
                    None => {
                        // No honest inspector left. A hidden-transaction fork
                        // wins the longest-chain race and replaces the
                        // canonical chain; other faulty blocks are invalid on
                        // their face and simply die with the slot.
                        if faults[fault_index].kind == FaultKind::HiddenOwnTxFork {
                            if let Evidence::Fork { chain, .. } = &faults[fault_index].evidence {
                                let old_tip = self.chain.tip_height();
                                self.chain =
                                    Chain::from_blocks(self.chain.owner, chain.blocks().to_vec());
                                for block in
                                    self.chain.blocks().iter().filter(|b| b.height > old_tip)
                                {
                                    blocks.push(BlockSummary {
                                        height: block.height,
                                        hash: block.hash.to_hex(),
                                        producer: block.producer,
                                        tx_count: block.txs.len(),
                                    });
                                }
                                if let Some(last) = slot_events.last_mut() {
                                    last.produced = Some(self.chain.tip_height());
                                }
                                fork_events.push(ForkEvent {
                                    attacker: node,
                                    position,
                                    detected: false,
                                    adopted: true,
                                });
                            }
                        }
                    }
                }
            }
        }

        self.apply_rewards(&mut state);

        Ok(RoundReport {
            round,
            blocks,
            reports,
            punishments,
            balance_deltas: self.accounts.audit[audit_start..].to_vec(),
            witness_list,
            slot_events,
            fork_events,
        })
    }

    /// Most recent transaction sent by `node` that sits at confirmation
    /// depth in the canonical chain.
    fn latest_consensus_tx_from(&self, node: NodeId) -> Option<TxId> {
        let deepest = self
            .chain
            .tip_height()
            .saturating_sub(self.config.confirmation_depth - 1);
        self.chain
            .blocks()
            .iter()
            .filter(|b| b.height >= 1 && b.height <= deepest)
            .flat_map(|b| b.txs.iter())
            .filter(|t| t.sender == node)
            .last()
            .map(|t| t.id)
    }

    /// First honest entity in queue order after `offender_idx`: pending
    /// original entries first, then the node-cycle tail. Returns the
    /// reporter's 1-based queue position.
    fn find_reporter(
        &self,
        state: &RoundState,
        offender_idx: usize,
        spec: &AdversarySpec,
        round: Round,
    ) -> Option<(usize, NodeId)> {
        for (idx, entry) in state.entries.iter().enumerate().skip(offender_idx + 1) {
            if entry.status != WitnessStatus::Pending {
                continue;
            }
            if adversary::plan_behavior(spec, entry.node, round) == Behavior::Honest {
                return Some((idx + 1, entry.node));
            }
        }
        for (tail_index, &entry_idx) in state.tail.iter().enumerate() {
            let node = state.entries[entry_idx].node;
            if adversary::plan_behavior(spec, node, round) == Behavior::Honest {
                return Some((state.tail_position(tail_index), node));
            }
        }
        None
    }

    /// Re-verifies the report's evidence and, if it holds, applies the
    /// punishment rules: terminate the offender, fine it and every silent
    /// intermediate `PA`, kick its same-group partners, fine its voters
    /// `PV` when it was a voted representative, and pay the reporter
    /// `PA * (k - j)`. A report whose evidence fails re-verification is
    /// dismissed with no penalties.
    pub fn adjudicate(
        &mut self,
        report: &MaliciousReport,
        fault: &FaultRecord,
        state: &mut RoundState,
    ) -> Option<PunishmentOutcome> {
        if report.offender_position >= report.reporter_position {
            return None;
        }
        if !self.reverify_evidence(fault) {
            return None;
        }
        let round = state.round;
        let offender_idx = report.offender_position - 1;
        state.entries[offender_idx].status = WitnessStatus::Terminated;

        self.accounts.debit(
            round,
            report.offender,
            self.config.penalty_pa,
            DeltaCause::OffenderFine,
        );

        let mut fined_intermediates = Vec::new();
        for (_, node) in self.queue_between(state, report) {
            self.accounts
                .debit(round, node, self.config.penalty_pa, DeltaCause::SilentFine);
            fined_intermediates.push(node);
        }

        let offender_group = state.entries[offender_idx].group;
        let mut kicked = Vec::new();
        for entry in state.entries.iter_mut() {
            if entry.group == offender_group
                && entry.node != report.offender
                && entry.status == WitnessStatus::Pending
            {
                entry.status = WitnessStatus::Kicked;
                kicked.push(entry.node);
            }
        }

        let mut fined_voters = Vec::new();
        if state.entries[offender_idx].provenance == Provenance::Voted {
            for &voter in &state.entries[offender_idx].voters.clone() {
                self.accounts
                    .debit(round, voter, self.config.penalty_pv, DeltaCause::VoterFine);
                fined_voters.push(voter);
            }
        }

        let distance = (report.reporter_position - report.offender_position) as u64;
        let bounty = self.config.penalty_pa * distance;
        self.accounts
            .credit(round, report.reporter, bounty, DeltaCause::ReporterBounty);

        let successor = state
            .entries
            .iter()
            .skip(report.offender_position)
            .find(|e| e.status == WitnessStatus::Pending)
            .map(|e| e.node);

        Some(PunishmentOutcome {
            round,
            offender: report.offender,
            offender_position: report.offender_position,
            reporter: report.reporter,
            reporter_position: report.reporter_position,
            kind: report.kind,
            bounty,
            fined_intermediates,
            kicked,
            fined_voters,
            successor,
        })
    }

    /// Active queue occupants strictly between the offender and the
    /// reporter: original entries still in the list, then tail inspectors.
    fn queue_between(
        &self,
        state: &RoundState,
        report: &MaliciousReport,
    ) -> Vec<(usize, NodeId)> {
        let mut out = Vec::new();
        for (idx, entry) in state.entries.iter().enumerate() {
            let position = idx + 1;
            if position <= report.offender_position || position >= report.reporter_position {
                continue;
            }
            if matches!(
                entry.status,
                WitnessStatus::Terminated | WitnessStatus::Kicked
            ) {
                continue;
            }
            out.push((position, entry.node));
        }
        for (tail_index, &entry_idx) in state.tail.iter().enumerate() {
            let position = state.tail_position(tail_index);
            if position > report.offender_position && position < report.reporter_position {
                out.push((position, state.entries[entry_idx].node));
            }
        }
        out
    }

    fn reverify_evidence(&self, fault: &FaultRecord) -> bool {
        match &fault.evidence {
            Evidence::MissedSlot { .. } => true,
            Evidence::BadBlock {
                block,
                expected_txids,
            } => {
                let actual: Vec<TxId> = block.txs.iter().map(|t| t.id).collect();
                block.check_integrity().is_err() || actual != *expected_txids
            }
            Evidence::Fork { chain, fork_height, .. } => {
                if chain.validate_structure().is_err() {
                    // A malformed fork is its own evidence.
                    return true;
                }
                let consensus_blocks: Vec<Block> = self
                    .chain
                    .blocks()
                    .iter()
                    .filter(|b| b.height >= *fork_height)
                    .cloned()
                    .collect();
                !crate::chain::diff_transactions(&consensus_blocks, chain).is_empty()
            }
        }
    }

    /// End-of-round rewards: every good packager earns `token_r`; voters of
    /// good voted representatives earn `token_v`.
    fn apply_rewards(&mut self, state: &mut RoundState) {
        let round = state.round;
        for entry in &state.entries {
            if entry.status != WitnessStatus::PackedGood {
                continue;
            }
            self.accounts
                .credit(round, entry.node, self.config.token_r, DeltaCause::PackReward);
            if entry.provenance == Provenance::Voted {
                for &voter in &entry.voters {
                    self.accounts
                        .credit(round, voter, self.config.token_v, DeltaCause::VoterReward);
                }
            }
        }
    }
}

/// Plain-DPoS baseline: stake-ranked top `witness_count` witnesses,
/// re-elected every round by stake-following voters. A small multiplicative
/// vote noise churns the boundary of the witness set; the returned order is
/// the round's packaging order and is stable for a fixed RNG state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DposBaselineConfig {
    pub witness_count: usize,
    pub slot_secs: f64,
    pub vote_noise: f64,
}

impl Default for DposBaselineConfig {
    fn default() -> Self {
        DposBaselineConfig {
            witness_count: 101,
            slot_secs: 12.42,
            // Churns only the boundary of the stake ranking; large values
            // would re-randomize the whole witness set every round.
            vote_noise: 0.001,
        }
    }
}

pub fn dpos_baseline_round(
    cfg: &DposBaselineConfig,
    stakes: &BTreeMap<NodeId, u64>,
    rng: &mut ChaCha12Rng,
) -> Vec<NodeId> {
    let mut scored: Vec<(f64, NodeId)> = stakes
        .iter()
        .map(|(&node, &stake)| {
            let noise = 1.0 + cfg.vote_noise * (rng.gen::<f64>() - 0.5);
            (stake as f64 * noise, node)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite scores").then(a.1.cmp(&b.1)));
    scored
        .into_iter()
        .take(cfg.witness_count)
        .map(|(_, node)| node)
        .collect()
}

/// PoW baseline: memoryless block arrivals with the configured mean
/// interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowBaselineConfig {
    pub mean_interval_secs: f64,
}

impl Default for PowBaselineConfig {
    fn default() -> Self {
        PowBaselineConfig {
            mean_interval_secs: 600.0,
        }
    }
}

/// Draws the next inter-arrival time in seconds.
pub fn pow_baseline_tick(cfg: &PowBaselineConfig, rng: &mut ChaCha12Rng) -> f64 {
    Exp::new(1.0 / cfg.mean_interval_secs)
        .expect("positive rate")
        .sample(rng)
}
