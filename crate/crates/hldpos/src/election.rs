//! Witness election: per-group voting, windowed voted-representative
//! selection, seeded random representative selection, cooldowns, and the
//! interleaved witness list.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouping::GroupAssignment;
use crate::types::{NodeId, Round};
use crate::vrf::sha256_concat;

#[derive(Debug, Error, PartialEq)]
pub enum ElectionError {
    #[error("ballot voter {voter} or candidate {candidate} not in group {group}")]
    CrossGroupBallot {
        group: u32,
        voter: NodeId,
        candidate: NodeId,
    },
    #[error("self-votes are disabled: voter {0}")]
    SelfVote(NodeId),
    #[error("voter {0} cast more than one ballot")]
    DuplicateVoter(NodeId),
    #[error("window must satisfy 0 <= sigma < tau <= 0.5, got ({sigma}, {tau})")]
    InvalidWindow { sigma: f64, tau: f64 },
    #[error("group {0} has no eligible candidate")]
    GroupExhausted(u32),
    #[error("tally for group {0} is empty")]
    EmptyTally(u32),
    #[error("group {group} picks malformed: {reason}")]
    BadPicks { group: u32, reason: String },
    #[error("node {0} appears twice in the witness list")]
    DuplicateWitness(NodeId),
}

/// One ballot: a node's single vote for a same-group candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ballot {
    pub voter: NodeId,
    pub candidate: NodeId,
    pub round: Round,
}

/// Descending vote ranking for one group; zero-vote members are ranked at
/// the tail. Ties break by ascending node id.
#[derive(Clone, Debug)]
pub struct VoteTally {
    pub group_index: u32,
    pub ranked: Vec<(NodeId, u32)>,
    pub group_size: usize,
}

/// Fractional rank window `[sigma, tau)` for voted-representative selection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub sigma: f64,
    pub tau: f64,
}

impl Default for Window {
    fn default() -> Self {
        Window {
            sigma: 0.0,
            tau: 0.5,
        }
    }
}

impl Window {
    pub fn validate(&self) -> Result<(), ElectionError> {
        if self.sigma >= 0.0 && self.sigma < self.tau && self.tau <= 0.5 {
            Ok(())
        } else {
            Err(ElectionError::InvalidWindow {
                sigma: self.sigma,
                tau: self.tau,
            })
        }
    }
}

/// Tracks the last round each node served as a representative, and resolves
/// the cooldown length: a fixed override or `ceil(group_size * rho)`.
///
/// A node recorded in round `r` is blocked through round `r + psi`; it is
/// also blocked for the remainder of round `r` itself, which prevents
/// double-selection within a round.
#[derive(Clone, Debug, Default)]
pub struct CooldownLedger {
    last_served: BTreeMap<NodeId, Round>,
    pub fixed_psi: Option<u64>,
    pub rho: f64,
}

impl CooldownLedger {
    pub fn new(fixed_psi: Option<u64>, rho: f64) -> Self {
        CooldownLedger {
            last_served: BTreeMap::new(),
            fixed_psi,
            rho,
        }
    }

    pub fn psi_for(&self, group_size: usize) -> u64 {
        self.fixed_psi
            .unwrap_or_else(|| (group_size as f64 * self.rho).ceil() as u64)
    }

    pub fn is_blocked(&self, node: NodeId, round: Round, group_size: usize) -> bool {
        match self.last_served.get(&node) {
            None => false,
            Some(&served) => round <= served + self.psi_for(group_size),
        }
    }

    pub fn record(&mut self, node: NodeId, round: Round) {
        self.last_served.insert(node, round);
    }

    pub fn last_served(&self, node: NodeId) -> Option<Round> {
        self.last_served.get(&node).copied()
    }
}

/// How an entry earned its witness slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Voted,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub node: NodeId,
    pub group: u32,
    pub provenance: Provenance,
}

/// The round's ordered packaging queue: per group (ascending), the voted
/// representatives then the random ones.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessList {
    pub round: Round,
    pub entries: Vec<WitnessEntry>,
}

impl WitnessList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based queue position of a node.
    pub fn position_of(&self, node: NodeId) -> Option<usize> {
        self.entries.iter().position(|e| e.node == node).map(|i| i + 1)
    }
}

/// One group's contribution to the witness list.
#[derive(Clone, Debug)]
pub struct GroupPicks {
    pub group: u32,
    pub voted: Vec<NodeId>,
    pub random: Vec<NodeId>,
}

/// Tallies a group's ballots into a descending ranking.
///
/// Every ballot must stay inside the group and self-votes are rejected;
/// abstention is simply a missing ballot.
pub fn tally_votes(
    ballots: &[Ballot],
    group_index: u32,
    members: &[NodeId],
) -> Result<VoteTally, ElectionError> {
    let member_set: BTreeSet<NodeId> = members.iter().copied().collect();
    let mut counts: BTreeMap<NodeId, u32> = members.iter().map(|&m| (m, 0)).collect();
    let mut seen_voters = BTreeSet::new();
    for ballot in ballots {
        if ballot.voter == ballot.candidate {
            return Err(ElectionError::SelfVote(ballot.voter));
        }
        if !member_set.contains(&ballot.voter) || !member_set.contains(&ballot.candidate) {
            return Err(ElectionError::CrossGroupBallot {
                group: group_index,
                voter: ballot.voter,
                candidate: ballot.candidate,
            });
        }
        if !seen_voters.insert(ballot.voter) {
            return Err(ElectionError::DuplicateVoter(ballot.voter));
        }
        *counts.get_mut(&ballot.candidate).expect("member") += 1;
    }
    let mut ranked: Vec<(NodeId, u32)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(VoteTally {
        group_index,
        ranked,
        group_size: members.len(),
    })
}

/// Selects the voted representative: the `(group_index mod |W|)`-th entry of
/// the eligible window `W = eligible[floor(N*sigma) .. floor(N*tau))`, where
/// the eligible ranking excludes cooldown-blocked nodes and `exclusions`.
/// Falls back to the full eligible ranking when the window is empty.
///
/// The selected node is recorded in the cooldown ledger.
pub fn select_voted_rep(
    tally: &VoteTally,
    window: Window,
    cooldowns: &mut CooldownLedger,
    round: Round,
    exclusions: &BTreeSet<NodeId>,
) -> Result<NodeId, ElectionError> {
    window.validate()?;
    if tally.ranked.is_empty() {
        return Err(ElectionError::EmptyTally(tally.group_index));
    }
    let eligible: Vec<NodeId> = tally
        .ranked
        .iter()
        .map(|&(node, _)| node)
        .filter(|&node| {
            !exclusions.contains(&node) && !cooldowns.is_blocked(node, round, tally.group_size)
        })
        .collect();
    if eligible.is_empty() {
        return Err(ElectionError::GroupExhausted(tally.group_index));
    }
    let n = eligible.len();
    let lo = (n as f64 * window.sigma) as usize;
    let hi = (n as f64 * window.tau) as usize;
    let candidates = if lo < hi { &eligible[lo..hi] } else { &eligible[..] };
    let selected = candidates[tally.group_index as usize % candidates.len()];
    cooldowns.record(selected, round);
    Ok(selected)
}

/// Index into a candidate queue of length `n` from a unit draw.
pub fn random_index(unit: f64, n: usize) -> usize {
    ((unit * n as f64) as usize).min(n - 1)
}

/// Selects the random representative from the group's candidate queue
/// (eligible members sorted by node id) at index `floor(u * n)`, with `u`
/// drawn from a PRNG seeded by `H(round_seed || group_index)`.
///
/// If cooldowns exhaust the queue, the oldest cooldown from a previous
/// round is dropped; hard `exclusions` (this round's picks, banned or
/// under-staked nodes) are never re-admitted.
pub fn select_random_rep(
    members: &[NodeId],
    exclusions: &BTreeSet<NodeId>,
    cooldowns: &mut CooldownLedger,
    round: Round,
    round_seed: &[u8],
    group_index: u32,
) -> Result<NodeId, ElectionError> {
    let group_size = members.len();
    let mut queue: Vec<NodeId> = members
        .iter()
        .copied()
        .filter(|&node| {
            !exclusions.contains(&node) && !cooldowns.is_blocked(node, round, group_size)
        })
        .collect();
    if queue.is_empty() {
        // Re-admit cooled-down nodes oldest-first, never same-round picks.
        let mut cooled: Vec<(Round, NodeId)> = members
            .iter()
            .copied()
            .filter(|&node| !exclusions.contains(&node))
            .filter_map(|node| {
                cooldowns
                    .last_served(node)
                    .filter(|&served| served < round)
                    .map(|served| (served, node))
            })
            .collect();
        cooled.sort_unstable();
        if let Some(&(_, oldest)) = cooled.first() {
            queue.push(oldest);
        }
    }
    if queue.is_empty() {
        return Err(ElectionError::GroupExhausted(group_index));
    }
    let seed = sha256_concat(&[b"hldpos-random-rep", round_seed, &group_index.to_be_bytes()]);
    let mut rng = ChaCha12Rng::from_seed(seed);
    let unit: f64 = rng.gen();
    let selected = queue[random_index(unit, queue.len())];
    cooldowns.record(selected, round);
    Ok(selected)
}

/// Assembles the witness list from per-group picks: groups ascending, voted
/// representatives before random ones within each group.
pub fn build_witness_list(
    picks: &[GroupPicks],
    round: Round,
) -> Result<WitnessList, ElectionError> {
    let mut sorted: Vec<&GroupPicks> = picks.iter().collect();
    sorted.sort_by_key(|p| p.group);
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for pick in sorted {
        if pick.voted.is_empty() || pick.voted.len() != pick.random.len() {
            return Err(ElectionError::BadPicks {
                group: pick.group,
                reason: format!(
                    "expected equal nonempty voted/random counts, got {}/{}",
                    pick.voted.len(),
                    pick.random.len()
                ),
            });
        }
        for (&node, provenance) in pick
            .voted
            .iter()
            .map(|n| (n, Provenance::Voted))
            .chain(pick.random.iter().map(|n| (n, Provenance::Random)))
        {
            if !seen.insert(node) {
                return Err(ElectionError::DuplicateWitness(node));
            }
            entries.push(WitnessEntry {
                node,
                group: pick.group,
                provenance,
            });
        }
    }
    Ok(WitnessList { round, entries })
}

/// Stake-following ballot model: honest nodes vote for the highest-stake
/// group mate; malicious nodes prefer a malicious group mate (lowest id)
/// and otherwise vote like honest nodes. Self-votes never occur.
pub fn stake_following_ballots(
    assignment: &GroupAssignment,
    stakes: &BTreeMap<NodeId, u64>,
    round: Round,
    is_malicious: impl Fn(NodeId) -> bool,
) -> Vec<Ballot> {
    let stake_of = |m: NodeId| stakes.get(&m).copied().unwrap_or(0);
    let mut ballots = Vec::new();
    for (_, members) in assignment.groups() {
        // Top two by (stake, lower id) and the two lowest-id malicious
        // members cover every voter's choice without per-voter scans.
        let mut ranked: Vec<NodeId> = members.to_vec();
        ranked.sort_by_key(|&m| (std::cmp::Reverse(stake_of(m)), m));
        let (first, second) = (ranked.first().copied(), ranked.get(1).copied());
        let mut bad = members.iter().copied().filter(|&m| is_malicious(m));
        let (bad_first, bad_second) = (bad.next(), bad.next());
        for &voter in members {
            let candidate = if is_malicious(voter) {
                if bad_first == Some(voter) {
                    bad_second
                } else {
                    bad_first
                }
            } else {
                None
            };
            let candidate = candidate.or(if first == Some(voter) { second } else { first });
            if let Some(candidate) = candidate.filter(|&c| c != voter) {
                ballots.push(Ballot {
                    voter,
                    candidate,
                    round,
                });
            }
        }
    }
    ballots
}
