//! Deterministic scenario runner. One scenario is a single logical thread
//! over simulated time: slot-driven block production for DPoS and HL-DPoS,
//! memoryless arrivals for PoW, a shared transaction pool, and seeded PRNG
//! streams so a (config, seed) pair fixes every output byte.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, LogNormal};

use crate::chain::Transaction;
use crate::election::{stake_following_ballots, CooldownLedger, Window};
use crate::engine::{
    dpos_baseline_round, pow_baseline_tick, ConsensusEngine, RoundInputs,
};
use crate::grouping::{assign_groups, merge_singletons, NodeRecord};
use crate::sim::{
    once_more_counts, Algorithm, Checkpoint, MetricsRecord, NodeTally, SimConfig, SimError,
};
use crate::types::NodeId;
use crate::vrf::{self, sha256_concat};

/// Seeds a named deterministic stream from the master seed.
fn stream_rng(master: u64, label: &str, extra: u64) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(sha256_concat(&[
        b"hldpos-sim",
        &master.to_be_bytes(),
        label.as_bytes(),
        &extra.to_be_bytes(),
    ]))
}

/// One produced block: when, by whom.
struct BlockEvent {
    time: f64,
    producer: NodeId,
}

struct AttackStats {
    built: u64,
    detected: u64,
    adopted: u64,
}

/// Runs one scenario to completion and collects metrics.
pub fn run_scenario(config: &SimConfig) -> Result<MetricsRecord, SimError> {
    config.validate()?;
    let duration = config.minutes * 60.0;
    let mut events: Vec<BlockEvent> = Vec::new();
    let mut attacks = AttackStats {
        built: 0,
        detected: 0,
        adopted: 0,
    };
    let mut final_balances: Vec<NodeTally> = Vec::new();

    match config.algo {
        Algorithm::Pow => run_pow(config, duration, &mut events),
        Algorithm::Dpos => run_dpos(config, duration, &mut events),
        Algorithm::Hldpos => {
            run_hldpos(config, duration, &mut events, &mut attacks, &mut final_balances)?
        }
    }

    // Broadcast latency draws are on their own stream and never influence
    // block production; only the mean is reported.
    let mut latency_rng = stream_rng(config.seed, "latency", 0);
    let latency = LogNormal::new(config.latency_median_ms.ln(), config.latency_sigma)
        .map_err(|e| SimError::Config(format!("latency model: {e}")))?;
    let mean_latency_ms = if events.is_empty() {
        0.0
    } else {
        let total: f64 = events.iter().map(|_| latency.sample(&mut latency_rng)).sum();
        total / events.len() as f64
    };

    let mut packed: BTreeMap<NodeId, u64> = BTreeMap::new();
    for event in &events {
        *packed.entry(event.producer).or_insert(0) += 1;
    }
    let (witness_once, witness_more) = once_more_counts(packed.values());

    let checkpoints = checkpoint_minutes(config.minutes)
        .into_iter()
        .map(|minute| {
            let horizon = minute as f64 * 60.0 + 1e-9;
            let mut counts: BTreeMap<NodeId, u64> = BTreeMap::new();
            let mut blocks = 0;
            for event in events.iter().take_while(|e| e.time <= horizon) {
                *counts.entry(event.producer).or_insert(0) += 1;
                blocks += 1;
            }
            let (once, more) = once_more_counts(counts.values());
            Checkpoint {
                minute,
                blocks,
                witness_once: once,
                witness_more: more,
            }
        })
        .collect();

    Ok(MetricsRecord {
        scenario_id: config.scenario_id(),
        algo: config.algo,
        nodes: config.nodes,
        minutes: config.minutes,
        seed: config.seed,
        psi: config.effective_psi(),
        blocks: events.len() as u64,
        witness_once,
        witness_more,
        forks_built: attacks.built,
        forks_detected: attacks.detected,
        forks_adopted: attacks.adopted,
        checkpoints,
        packed_per_node: packed
            .into_iter()
            .map(|(node, value)| NodeTally { node, value })
            .collect(),
        final_balances,
        mean_latency_ms,
    })
}

/// Checkpoints at every 10 simulated minutes, plus the horizon itself when
/// it is not a multiple of 10.
fn checkpoint_minutes(minutes: f64) -> Vec<u64> {
    let whole = minutes.floor() as u64;
    let mut out: Vec<u64> = (1..=whole / 10).map(|k| k * 10).collect();
    if whole >= 1 && whole % 10 != 0 {
        out.push(whole);
    }
    if out.is_empty() && whole >= 1 {
        out.push(whole);
    }
    out
}

fn deterministic_stakes(config: &SimConfig) -> BTreeMap<NodeId, u64> {
    let mut rng = stream_rng(config.seed, "stakes", 0);
    (0..config.nodes as u64)
        .map(|i| (NodeId(i), rng.gen_range(1..=config.stake_max)))
        .collect()
}

fn run_pow(config: &SimConfig, duration: f64, events: &mut Vec<BlockEvent>) {
    let mut arrival_rng = stream_rng(config.seed, "pow-arrivals", 0);
    let mut producer_rng = stream_rng(config.seed, "pow-producer", 0);
    let mut t = 0.0;
    loop {
        t += pow_baseline_tick(&config.pow, &mut arrival_rng);
        if t > duration {
            break;
        }
        let producer = NodeId(producer_rng.gen_range(0..config.nodes as u64));
        events.push(BlockEvent { time: t, producer });
    }
}

fn run_dpos(config: &SimConfig, duration: f64, events: &mut Vec<BlockEvent>) {
    let stakes = deterministic_stakes(config);
    let mut vote_rng = stream_rng(config.seed, "dpos-votes", 0);
    let slot = config.engine.slot_secs;
    let mut t = 0.0;
    'outer: loop {
        let witnesses = dpos_baseline_round(&config.dpos, &stakes, &mut vote_rng);
        for producer in witnesses {
            t += slot;
            if t > duration + 1e-9 {
                break 'outer;
            }
            events.push(BlockEvent { time: t, producer });
        }
    }
}

/// Shared transaction pool fed by a memoryless arrival process.
struct TxFlow {
    rng: ChaCha12Rng,
    gap: Option<Exp<f64>>,
    next_time: f64,
    nonce: u64,
    nodes: u64,
}

impl TxFlow {
    fn new(config: &SimConfig) -> Self {
        let mut rng = stream_rng(config.seed, "txflow", 0);
        let gap = (config.tx_rate > 0.0).then(|| Exp::new(config.tx_rate).expect("positive rate"));
        let next_time = gap.as_ref().map_or(f64::INFINITY, |g| g.sample(&mut rng));
        TxFlow {
            rng,
            gap,
            next_time,
            nonce: 0,
            nodes: config.nodes as u64,
        }
    }

    /// Drains arrivals up to `horizon` into the engine pool.
    fn fill(&mut self, engine: &mut ConsensusEngine, horizon: f64, round: u64) {
        let Some(gap) = self.gap else { return };
        while self.next_time <= horizon {
            let sender = NodeId(self.rng.gen_range(0..self.nodes));
            let receiver = NodeId(self.rng.gen_range(0..self.nodes));
            let amount = self.rng.gen_range(1..=1000);
            engine.submit_transaction(Transaction::new(sender, receiver, amount, round, self.nonce));
            self.nonce += 1;
            self.next_time += gap.sample(&mut self.rng);
        }
    }
}

fn run_hldpos(
    config: &SimConfig,
    duration: f64,
    events: &mut Vec<BlockEvent>,
    attacks: &mut AttackStats,
    final_balances: &mut Vec<NodeTally>,
) -> Result<(), SimError> {
    let params = config.curve.params();
    let stakes = deterministic_stakes(config);
    let nodes: Vec<NodeRecord> = (0..config.nodes as u64)
        .map(|i| {
            let seed = sha256_concat(&[b"node-key", &config.seed.to_be_bytes(), &i.to_be_bytes()]);
            Ok(NodeRecord {
                id: NodeId(i),
                keypair: vrf::keygen(&params, &seed)?,
                balance: config.initial_balance,
                stake: stakes[&NodeId(i)],
                honest: true,
            })
        })
        .collect::<Result<_, crate::vrf::VrfError>>()
        .map_err(|e| SimError::Config(e.to_string()))?;
    let adversary = config
        .adversary
        .to_spec()
        .map_err(|e| SimError::Config(e.to_string()))?;

    let balances: BTreeMap<NodeId, u64> = nodes
        .iter()
        .map(|n| (n.id, n.balance))
        .collect();
    let mut engine = ConsensusEngine::new(
        config.engine.clone(),
        balances,
        CooldownLedger::new(config.psi, config.rho),
        Window {
            sigma: config.window_sigma,
            tau: config.window_tau,
        },
        config.reps_per_group,
    )
    .map_err(SimError::Engine)?;

    let mut txflow = TxFlow::new(config);
    let slot = config.engine.slot_secs;
    let list_len = (config.groups * config.reps_per_group) as f64;
    let mut t = 0.0;
    let mut assignment = None;
    let mut last_epoch = u64::MAX;

    'outer: for round in 1u64.. {
        let epoch = (round - 1) / config.epoch_rounds;
        if assignment.is_none() || epoch != last_epoch {
            let raw = assign_groups(&params, &nodes, config.groups, epoch)?;
            let merge_seed =
                sha256_concat(&[b"merge", &config.seed.to_be_bytes(), &epoch.to_be_bytes()]);
            assignment = Some(merge_singletons(&raw, &merge_seed)?);
            last_epoch = epoch;
        }
        let assignment_ref = assignment.as_ref().expect("assigned above");
        let ballots = stake_following_ballots(assignment_ref, &stakes, round, |n| {
            crate::adversary::plan_behavior(&adversary, n, round)
                != crate::adversary::Behavior::Honest
        });
        // Feed the pool with everything arriving during this round's slots.
        txflow.fill(&mut engine, t + slot * list_len, round);
        let round_seed = sha256_concat(&[
            b"round-seed",
            &config.seed.to_be_bytes(),
            &round.to_be_bytes(),
        ]);
        let report = engine
            .run_round(&RoundInputs {
                round,
                assignment: assignment_ref,
                ballots: &ballots,
                adversary: &adversary,
                round_seed: &round_seed,
            })
            .map_err(SimError::Engine)?;

        let forks_by_position: BTreeMap<usize, (bool, bool)> = report
            .fork_events
            .iter()
            .map(|f| (f.position, (f.detected, f.adopted)))
            .collect();
        for slot_event in &report.slot_events {
            t += slot;
            if t > duration + 1e-9 {
                break 'outer;
            }
            if let Some(&(detected, adopted)) = forks_by_position.get(&slot_event.position) {
                attacks.built += 1;
                if detected {
                    attacks.detected += 1;
                }
                if adopted {
                    attacks.adopted += 1;
                }
            }
            if slot_event.produced.is_some() {
                events.push(BlockEvent {
                    time: t,
                    producer: slot_event.node,
                });
            }
        }
    }

    *final_balances = engine
        .accounts
        .balances()
        .iter()
        .map(|(&node, &value)| NodeTally { node, value })
        .collect();
    Ok(())
}
