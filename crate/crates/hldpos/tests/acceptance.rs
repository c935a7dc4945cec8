//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `--nocapture` to see them). Thresholds and tolerances are
//! pinned in code.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use hldpos::adversary::{AdversarySpec, Behavior};
use hldpos::chain::Transaction;
use hldpos::election::{Ballot, CooldownLedger, Window};
use hldpos::engine::{ConsensusEngine, DeltaCause, EngineConfig, RoundInputs};
use hldpos::grouping::{assign_groups, GroupAssignment};
use hldpos::payoff::{
    expected_profit, expected_profit_after_normal, fault_tolerance, simulate_game,
    BehaviorProfile, PayoffParams,
};
use hldpos::sim::{csv_string, json_string, run_scenario, sweep_psi, Algorithm, SimConfig};
use hldpos::types::NodeId;
use hldpos::vrf::{self, CurveParams, VrfProof};

fn pass(criterion: &str, detail: String) {
    println!("ACCEPTANCE {criterion}: PASS — {detail}");
}

fn base_config(algo: Algorithm, nodes: usize, minutes: f64, seed: u64) -> SimConfig {
    let mut config = SimConfig::default();
    config.algo = algo;
    config.nodes = nodes;
    config.minutes = minutes;
    config.seed = seed;
    config
}

#[test]
fn criterion_1_throughput_reproduction() {
    // Slot-driven chains produce exactly floor(60 * minutes / 12.42)
    // blocks: 48 at 10 minutes, 289 at 60 minutes, under 10 s per scenario.
    let cells = [
        (Algorithm::Hldpos, 500, 10.0, 48u64),
        (Algorithm::Hldpos, 5000, 60.0, 289),
        (Algorithm::Dpos, 500, 10.0, 48),
        (Algorithm::Dpos, 5000, 60.0, 289),
    ];
    let mut timings = Vec::new();
    for (algo, nodes, minutes, expected) in cells {
        let config = base_config(algo, nodes, minutes, 42);
        let start = Instant::now();
        let record = run_scenario(&config).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        assert_eq!(
            record.blocks, expected,
            "{algo} nodes={nodes} minutes={minutes}"
        );
        assert_eq!(record.forks_built, 0);
        assert!(
            elapsed < 10.0,
            "{algo} nodes={nodes}: scenario took {elapsed:.2} s"
        );
        timings.push(format!("{algo}/{nodes}n/{minutes}m={expected} in {elapsed:.2}s"));
    }
    pass("1 throughput", timings.join(", "));
}

#[test]
fn criterion_2_pow_baseline() {
    // 10-minute runs: at most 3 blocks in at least 95 of 100 seeds.
    let mut small = 0;
    for seed in 0..100 {
        let config = base_config(Algorithm::Pow, 500, 10.0, seed);
        let record = run_scenario(&config).unwrap();
        if record.blocks <= 3 {
            small += 1;
        }
    }
    assert!(small >= 95, "only {small}/100 runs had <= 3 blocks");
    // 60-minute runs: mean block count within [4, 8].
    let mut total = 0u64;
    for seed in 0..100 {
        let config = base_config(Algorithm::Pow, 500, 60.0, seed);
        total += run_scenario(&config).unwrap().blocks;
    }
    let mean = total as f64 / 100.0;
    assert!(
        (4.0..=8.0).contains(&mean),
        "60-minute mean {mean} outside [4, 8]"
    );
    pass(
        "2 pow-baseline",
        format!("{small}/100 ten-minute runs <= 3 blocks; 60-minute mean {mean:.2}"),
    );
}

#[test]
fn criterion_3_node_count_insensitivity() {
    let node_counts = [500usize, 1000, 2000, 3000, 4000, 5000];
    let mut blocks = Vec::new();
    for &nodes in &node_counts {
        let config = base_config(Algorithm::Hldpos, nodes, 10.0, 42);
        blocks.push(run_scenario(&config).unwrap().blocks);
    }
    let min = *blocks.iter().min().unwrap();
    let max = *blocks.iter().max().unwrap();
    assert!(max - min <= 2, "block counts {blocks:?} spread more than 2");
    pass(
        "3 node-count-insensitivity",
        format!("counts {blocks:?} over {node_counts:?}"),
    );
}

#[test]
fn criterion_4_centralization_shape() {
    let seeds: Vec<u64> = (0..20).collect();
    let mut shaped = 0;
    for &seed in &seeds {
        let dpos = run_scenario(&base_config(Algorithm::Dpos, 5000, 60.0, seed)).unwrap();
        let hl = run_scenario(&base_config(Algorithm::Hldpos, 5000, 60.0, seed)).unwrap();
        // 20-minute checkpoint: nobody has entered the queue twice yet.
        let dpos20 = dpos.checkpoint_at(20).unwrap();
        let hl20 = hl.checkpoint_at(20).unwrap();
        assert_eq!(dpos20.witness_more, 0, "seed {seed}: dpos multi at 20 min");
        assert_eq!(hl20.witness_more, 0, "seed {seed}: hldpos multi at 20 min");
        // 60-minute shape: repeat entries dominate plain DPoS; single
        // entries dominate HL-DPoS.
        let dpos60 = dpos.checkpoint_at(60).unwrap();
        let hl60 = hl.checkpoint_at(60).unwrap();
        if dpos60.witness_more > dpos60.witness_once && hl60.witness_once > hl60.witness_more {
            shaped += 1;
        }
    }
    assert!(
        shaped >= 16,
        "only {shaped}/20 seeds show the centralization shape"
    );
    pass(
        "4 centralization-shape",
        format!("zero multi-entry at 20 min for all seeds; shape held in {shaped}/20 seeds"),
    );
}

#[test]
fn criterion_5_psi_monotonicity() {
    let psi_values = [0u64, 1, 2, 3, 4, 5];
    let checkpoints = [30u64, 40, 50, 60];
    let mut monotone_seeds = 0;
    for seed in 0..20u64 {
        let base = base_config(Algorithm::Hldpos, 1000, 60.0, seed);
        let records = sweep_psi(&base, &psi_values).unwrap();
        let mut monotone = true;
        for &minute in &checkpoints {
            let series: Vec<u64> = records
                .iter()
                .map(|r| r.checkpoint_at(minute).unwrap().witness_more)
                .collect();
            if !series.windows(2).all(|w| w[0] >= w[1]) {
                monotone = false;
            }
        }
        if monotone {
            monotone_seeds += 1;
        }
    }
    assert!(
        monotone_seeds >= 16,
        "multi-entry counts non-increasing in psi for only {monotone_seeds}/20 seeds"
    );
    pass(
        "5 psi-monotonicity",
        format!("non-increasing over psi 0..=5 at every checkpoint >= 30 min in {monotone_seeds}/20 seeds"),
    );
}

/// Five 2-member groups over nodes 0..10; queue positions deterministic.
fn paired_assignment() -> GroupAssignment {
    let mut groups = BTreeMap::new();
    for g in 1..=5u32 {
        let base = (g as u64 - 1) * 2;
        groups.insert(g, vec![NodeId(base), NodeId(base + 1)]);
    }
    GroupAssignment::from_parts(0, groups)
}

fn mutual_ballots(assignment: &GroupAssignment, round: u64) -> Vec<Ballot> {
    let mut ballots = Vec::new();
    for (_, members) in assignment.groups() {
        for &voter in members {
            let candidate = members.iter().copied().find(|&m| m != voter).unwrap();
            ballots.push(Ballot {
                voter,
                candidate,
                round,
            });
        }
    }
    ballots
}

#[test]
fn criterion_6_long_range_attack_detection() {
    // Node 0 sits at queue position 1 every round (voted rep of group 1)
    // and forks from round 2 on; everyone else is honest.
    let config = EngineConfig::default();
    let balances: BTreeMap<NodeId, u64> = (0..10).map(|i| (NodeId(i), 1_000_000)).collect();
    let mut engine = ConsensusEngine::new(
        config.clone(),
        balances,
        CooldownLedger::new(Some(0), 0.2),
        Window::default(),
        2,
    )
    .unwrap();
    let assignment = paired_assignment();
    let mut kinds = BTreeMap::new();
    kinds.insert(NodeId(0), Behavior::HideOwnTxFork);
    let adversary = AdversarySpec::new(kinds, 2, u64::MAX).unwrap();

    let rounds = 1000u64;
    let mut built = 0u64;
    let mut detected = 0u64;
    let mut adopted = 0u64;
    for round in 1..=rounds {
        // A fresh transaction from the attacker every round keeps a target
        // on the chain.
        engine.submit_transaction(Transaction::new(NodeId(0), NodeId(5), 10, round, round));
        let before = engine.accounts.balance(NodeId(0));
        let ballots = mutual_ballots(&assignment, round);
        let report = engine
            .run_round(&RoundInputs {
                round,
                assignment: &assignment,
                ballots: &ballots,
                adversary: &adversary,
                round_seed: &round.to_be_bytes(),
            })
            .unwrap();
        for fork in &report.fork_events {
            built += 1;
            if fork.detected {
                detected += 1;
            }
            if fork.adopted {
                adopted += 1;
            }
        }
        if !report.fork_events.is_empty() {
            // Attacker loses at least the offender fine this round.
            let delta = engine.accounts.balance(NodeId(0)) as i64 - before as i64;
            assert!(
                delta <= -(config.penalty_pa as i64),
                "round {round}: attacker delta {delta}"
            );
            // Reporter bounty is exactly PA * (k - j), via the audit log.
            let outcome = &report.punishments[0];
            let distance = (outcome.reporter_position - outcome.offender_position) as u64;
            assert_eq!(outcome.bounty, config.penalty_pa * distance);
            let bounty_applied: i64 = report
                .balance_deltas
                .iter()
                .filter(|e| e.cause == DeltaCause::ReporterBounty && e.node == outcome.reporter)
                .map(|e| e.applied)
                .sum();
            assert_eq!(bounty_applied, (config.penalty_pa * distance) as i64);
        }
    }
    assert_eq!(built, rounds - 1, "one fork per round from round 2");
    assert_eq!(detected, built, "every fork detected");
    assert_eq!(adopted, 0, "no fork adopted");

    // Negative control: every witness after the attacker colludes, so the
    // fork replaces the canonical chain.
    let balances: BTreeMap<NodeId, u64> = (0..10).map(|i| (NodeId(i), 1_000_000)).collect();
    let mut engine = ConsensusEngine::new(
        config,
        balances,
        CooldownLedger::new(Some(0), 0.2),
        Window::default(),
        2,
    )
    .unwrap();
    let mut kinds: BTreeMap<NodeId, Behavior> = (1..10)
        .map(|n| (NodeId(n), Behavior::ColludeSilent))
        .collect();
    kinds.insert(NodeId(0), Behavior::HideOwnTxFork);
    let colluding = AdversarySpec::new(kinds, 2, u64::MAX).unwrap();
    engine.submit_transaction(Transaction::new(NodeId(0), NodeId(5), 10, 1, 0));
    let mut control_adopted = 0;
    for round in 1..=3u64 {
        let ballots = mutual_ballots(&assignment, round);
        let report = engine
            .run_round(&RoundInputs {
                round,
                assignment: &assignment,
                ballots: &ballots,
                adversary: &colluding,
                round_seed: &round.to_be_bytes(),
            })
            .unwrap();
        control_adopted += report.fork_events.iter().filter(|f| f.adopted).count();
        assert!(report.reports.is_empty() || round == 1);
    }
    assert!(control_adopted > 0, "collusion control never adopted a fork");
    pass(
        "6 long-range-attack",
        format!(
            "{built} forks built, {detected} detected, {adopted} adopted over {rounds} rounds; \
             collusion control adopted {control_adopted}"
        ),
    );
}

/// Exhaustive 2^kappa enumeration of behavior outcomes, restating the
/// payoff rules independently of the library implementation.
fn enumeration_oracle(p: &PayoffParams<f64>, probs: &[f64], position: usize) -> f64 {
    let kappa = p.queue_len;
    let fine = p.penalty_multiplier as f64 * p.malicious_gain;
    let mut expectation = 0.0;
    for mask in 0u32..(1 << kappa) {
        let normal: Vec<bool> = (0..kappa).map(|i| mask & (1 << i) != 0).collect();
        let weight: f64 = normal
            .iter()
            .enumerate()
            .map(|(i, &n)| if n { probs[i] } else { 1.0 - probs[i] })
            .product();
        let payoff = if normal[..position].iter().all(|&n| n) {
            p.honest_profit
        } else if p.prior_offset >= 1
            && position > p.prior_offset
            && !normal[position - p.prior_offset - 1]
            && (0..position)
                .filter(|&i| i != position - p.prior_offset - 1)
                .all(|i| normal[i])
        {
            p.prior_offset as f64 * fine + p.honest_profit
        } else if position + p.next_offset <= kappa
            && (position - 1..position + p.next_offset - 1).all(|i| !normal[i])
            && normal[position + p.next_offset - 1]
        {
            -fine
        } else if normal.iter().all(|&n| !n) {
            p.malicious_gain
        } else {
            0.0
        };
        expectation += weight * payoff;
    }
    expectation
}

#[test]
fn criterion_7_payoff_oracle_equivalence() {
    // Analytic expected profit equals exhaustive enumeration to 1e-9 for
    // every queue length up to 6.
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    let mut checked = 0;
    for kappa in 2usize..=6 {
        for (lambda1, lambda2) in [(1, 1), (1, 2), (2, 1), (0, 1)] {
            if lambda1 >= kappa || lambda2 >= kappa {
                continue;
            }
            let params = PayoffParams {
                honest_profit: 10.0,
                malicious_gain: 3.0,
                penalty_multiplier: 2,
                queue_len: kappa,
                prior_offset: lambda1,
                next_offset: lambda2,
            };
            let probs: Vec<f64> = (0..kappa).map(|_| rng.gen::<f64>()).collect();
            let profile = BehaviorProfile::new(probs.clone()).unwrap();
            for position in 1..=kappa {
                let analytic = expected_profit(&params, &profile, position).unwrap();
                let oracle = enumeration_oracle(&params, &probs, position);
                assert!(
                    (analytic - oracle).abs() < 1e-9,
                    "kappa={kappa} l1={lambda1} l2={lambda2} position={position}: \
                     {analytic} vs {oracle}"
                );
                checked += 1;
            }
        }
    }

    // Monte-Carlo with 1e5 samples within 1% relative of the analytic
    // value at every position.
    let params = PayoffParams {
        honest_profit: 10.0,
        malicious_gain: 3.0,
        penalty_multiplier: 2,
        queue_len: 4,
        prior_offset: 1,
        next_offset: 1,
    };
    let profile = BehaviorProfile::uniform(4, 0.9).unwrap();
    let empirical = simulate_game(&params, &profile, 100_000, 7).unwrap();
    for position in 1..=4 {
        let analytic: f64 = expected_profit(&params, &profile, position).unwrap();
        let mc = empirical[position - 1];
        assert!(
            (mc - analytic).abs() <= 0.01 * analytic.abs(),
            "position {position}: MC {mc} vs analytic {analytic}"
        );
    }

    // Closed forms hold exactly.
    for (l1, rho, p2, p1) in [(1usize, 2u32, 1.0, 10.0), (3, 4, 2.5, 7.0), (0, 9, 5.0, 1.0)] {
        let params = PayoffParams {
            honest_profit: p1,
            malicious_gain: p2,
            penalty_multiplier: rho,
            queue_len: 6,
            prior_offset: l1,
            next_offset: 1,
        };
        assert_eq!(
            expected_profit_after_normal(&params),
            l1 as f64 * rho as f64 * p2 + p1
        );
    }
    assert_eq!(
        fault_tolerance(101).unwrap(),
        num_rational::Ratio::new(100u64, 101)
    );
    pass(
        "7 payoff-oracle",
        format!("{checked} enumeration comparisons within 1e-9; MC within 1%; closed forms exact"),
    );
}

#[test]
fn criterion_8_vrf_property_suite() {
    let params = CurveParams::toy_medium();
    // 1e4 evaluate/verify cycles across 100 keys x 100 inputs, all accept.
    let mut cycles = 0;
    for key_seed in 0u64..100 {
        let kp = vrf::keygen(&params, &key_seed.to_be_bytes()).unwrap();
        for input_index in 0u64..100 {
            let input = [key_seed.to_be_bytes(), input_index.to_be_bytes()].concat();
            let (output, proof) = vrf::evaluate(&params, &kp, &input).unwrap();
            assert!(
                vrf::verify(&params, &kp.public, &input, &output, &proof),
                "cycle ({key_seed}, {input_index}) rejected"
            );
            cycles += 1;
        }
    }
    assert_eq!(cycles, 10_000);

    // 1e3 random single-bit mutations of proof or output, all reject.
    let kp = vrf::keygen(&params, b"mutation-suite").unwrap();
    let input = b"mutation input";
    let (output, proof) = vrf::evaluate(&params, &kp, input).unwrap();
    let proof_bytes = proof.to_bytes(&params);
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let mut rejected = 0;
    for i in 0..1000 {
        if i % 2 == 0 {
            let mut mutated = proof_bytes.clone();
            let byte = rng.gen_range(0..mutated.len());
            let bit = rng.gen_range(0..8);
            mutated[byte] ^= 1 << bit;
            let accepted = match VrfProof::from_bytes(&params, &mutated) {
                Some(bad) => vrf::verify(&params, &kp.public, input, &output, &bad),
                None => false,
            };
            assert!(!accepted, "proof mutation {i} accepted");
        } else {
            let mut bad = output;
            let byte = rng.gen_range(0..32);
            let bit = rng.gen_range(0..8);
            bad.0[byte] ^= 1 << bit;
            assert!(
                !vrf::verify(&params, &kp.public, input, &bad, &proof),
                "output mutation {i} accepted"
            );
        }
        rejected += 1;
    }
    assert_eq!(rejected, 1000);

    // Chi-square uniformity of group assignment: 1e4 nodes over 10 groups,
    // statistic below the 0.99 quantile of chi^2(9) = 21.666.
    let nodes: Vec<_> = (0..10_000u64)
        .map(|i| hldpos::grouping::NodeRecord {
            id: NodeId(i),
            keypair: vrf::keygen(&params, &i.to_be_bytes()).unwrap(),
            balance: 100,
            stake: 1,
            honest: true,
        })
        .collect();
    let assignment = assign_groups(&params, &nodes, 10, 1).unwrap();
    let expected = 1000.0;
    let chi2: f64 = assignment
        .groups()
        .map(|(_, members)| {
            let d = members.len() as f64 - expected;
            d * d / expected
        })
        .sum();
    assert!(chi2 < 21.666, "chi-square statistic {chi2}");
    pass(
        "8 vrf-properties",
        format!("{cycles} cycles accepted; {rejected} mutations rejected; chi2 {chi2:.2} < 21.666"),
    );
}

#[test]
fn criterion_9_determinism() {
    let mut attack = base_config(Algorithm::Hldpos, 500, 5.0, 11);
    attack.adversary.malicious = vec![hldpos::sim::MaliciousEntry {
        node: 3,
        behavior: Behavior::WrongTx,
    }];
    attack.adversary.from_round = 1;
    attack.adversary.to_round = 100;
    let configs = [
        attack,
        base_config(Algorithm::Dpos, 500, 5.0, 11),
        base_config(Algorithm::Pow, 500, 5.0, 11),
    ];
    for config in &configs {
        let a = run_scenario(config).unwrap();
        let b = run_scenario(config).unwrap();
        let csv_a = csv_string(std::slice::from_ref(&a));
        let csv_b = csv_string(std::slice::from_ref(&b));
        assert_eq!(csv_a.as_bytes(), csv_b.as_bytes(), "{}", config.scenario_id());
        let json_a = json_string(&a);
        let json_b = json_string(&b);
        assert_eq!(json_a.as_bytes(), json_b.as_bytes(), "{}", config.scenario_id());
    }
    pass(
        "9 determinism",
        format!("{} scenarios byte-identical on rerun (CSV and JSON)", configs.len()),
    );
}
