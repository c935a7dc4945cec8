//! HL-DPoS consensus laboratory.
//!
//! A library implementation of the HL-DPoS protocol — delegated proof of
//! stake hardened against centralization and long-range attacks — plus a
//! deterministic simulator for throughput and centralization experiments.
//!
//! The protocol pipeline each round:
//!
//! 1. [`vrf`] — every node evaluates a verifiable random function over the
//!    epoch counter; anyone can check the result against the node's public
//!    key.
//! 2. [`grouping`] — nodes are sharded into groups from their VRF outputs.
//! 3. [`election`] — each group contributes one voted representative and
//!    one randomly selected representative to the witness list, subject to
//!    re-entry cooldowns.
//! 4. [`engine`] — witnesses package blocks in list order; later witnesses
//!    inspect earlier ones, report faults, and collect bounties funded by
//!    the offenders' fines.
//! 5. [`chain`] — longest-chain selection guarded by a missing-transaction
//!    scan that rejects forks hiding previously agreed transactions.
//!
//! [`adversary`] scripts malicious witness behaviors, [`payoff`] evaluates
//! the report-and-punish game analytically and by Monte Carlo, and [`sim`]
//! drives whole scenarios with seeded determinism and CSV/JSON export.

pub mod adversary;
pub mod chain;
pub mod election;
pub mod engine;
pub mod grouping;
pub mod payoff;
pub mod sim;
pub mod types;
pub mod vrf;

pub use types::NodeId;
