//! Analytic and Monte-Carlo evaluation of the report-and-punish game.
//!
//! A packaging queue of `queue_len` witnesses plays in order. Behaving
//! normally earns `honest_profit` (P1); misbehaving grabs `malicious_gain`
//! (P2) but a later honest witness turns it into a fine of
//! `penalty_multiplier * P2`, which the reporter pockets. The expected
//! profit of a queue position is a four-term expression over the behavior
//! profile: the all-honest term, the report-bounty term (a prior offender
//! `prior_offset` positions back), the punished-malicious term (the first
//! honest successor `next_offset` positions ahead), and the all-malicious
//! term. The same outcome rules drive the Monte-Carlo sampler, so the two
//! evaluations agree exactly in the degenerate cases and statistically
//! otherwise.
//!
//! Everything here is scalar-type-agnostic over `num_traits::Float`;
//! `fault_tolerance` is exact rational arithmetic.

use num_rational::Ratio;
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PayoffError {
    #[error("invalid payoff params: {0}")]
    InvalidParams(String),
    #[error("queue position {position} out of range 1..={queue_len}")]
    PositionOutOfRange { position: usize, queue_len: usize },
    #[error("profile length {got} does not match queue length {expected}")]
    ProfileLength { expected: usize, got: usize },
    #[error("behavior probability must lie in [0, 1]")]
    BadProbability,
    #[error("queue length must be positive")]
    ZeroQueue,
    #[error("sample count must be positive")]
    ZeroSamples,
}

/// Game parameters.
///
/// `prior_offset` (lambda-1) is how many positions back the reported prior
/// offender sits; 0 means no prior offender, the documented limit case in
/// which the honest payoff reduces to P1. `next_offset` (lambda-2) is the
/// distance to the first honest successor in the punished branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PayoffParams<F> {
    pub honest_profit: F,
    pub malicious_gain: F,
    pub penalty_multiplier: u32,
    pub queue_len: usize,
    pub prior_offset: usize,
    pub next_offset: usize,
}

impl<F: Float> PayoffParams<F> {
    pub fn validate(&self) -> Result<(), PayoffError> {
        if self.penalty_multiplier < 1 {
            return Err(PayoffError::InvalidParams(
                "penalty_multiplier must be >= 1".into(),
            ));
        }
        if self.queue_len < 2 {
            return Err(PayoffError::InvalidParams("queue_len must be >= 2".into()));
        }
        if self.prior_offset >= self.queue_len {
            return Err(PayoffError::InvalidParams(format!(
                "prior_offset {} must be < queue_len {}",
                self.prior_offset, self.queue_len
            )));
        }
        if self.next_offset < 1 || self.next_offset >= self.queue_len {
            return Err(PayoffError::InvalidParams(format!(
                "next_offset {} must be in 1..queue_len ({})",
                self.next_offset, self.queue_len
            )));
        }
        Ok(())
    }

    /// The fine: penalty_multiplier * P2.
    fn penalty(&self) -> F {
        F::from(self.penalty_multiplier).expect("small integer fits") * self.malicious_gain
    }
}

/// Per-position probability of behaving normally, each in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorProfile<F>(Vec<F>);

impl<F: Float> BehaviorProfile<F> {
    pub fn new(probabilities: Vec<F>) -> Result<Self, PayoffError> {
        if probabilities
            .iter()
            .any(|p| *p < F::zero() || *p > F::one())
        {
            return Err(PayoffError::BadProbability);
        }
        Ok(BehaviorProfile(probabilities))
    }

    pub fn uniform(len: usize, probability: F) -> Result<Self, PayoffError> {
        Self::new(vec![probability; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Probability that the witness at 1-based `position` behaves normally.
    fn normal(&self, position: usize) -> F {
        self.0[position - 1]
    }

    fn check_len(&self, params: &PayoffParams<F>) -> Result<(), PayoffError> {
        if self.len() != params.queue_len {
            return Err(PayoffError::ProfileLength {
                expected: params.queue_len,
                got: self.len(),
            });
        }
        Ok(())
    }
}

/// Expected profit of the witness at `position` (1-based): the four-term
/// expectation over the behavior profile.
pub fn expected_profit<F: Float>(
    params: &PayoffParams<F>,
    profile: &BehaviorProfile<F>,
    position: usize,
) -> Result<F, PayoffError> {
    params.validate()?;
    profile.check_len(params)?;
    if position < 1 || position > params.queue_len {
        return Err(PayoffError::PositionOutOfRange {
            position,
            queue_len: params.queue_len,
        });
    }
    let p1 = params.honest_profit;
    let p2 = params.malicious_gain;
    let fine = params.penalty();

    // All of 1..=position honest.
    let mut all_honest = F::one();
    for i in 1..=position {
        all_honest = all_honest * profile.normal(i);
    }
    let mut total = all_honest * p1;

    // A single offender prior_offset back, everyone else up to here honest:
    // report it and collect prior_offset fines on top of P1.
    if params.prior_offset >= 1 && position > params.prior_offset {
        let offender = position - params.prior_offset;
        let mut weight = F::one();
        for i in 1..=position {
            let p = profile.normal(i);
            weight = weight * if i == offender { F::one() - p } else { p };
        }
        let bounty = F::from(params.prior_offset).expect("small integer fits") * fine;
        total = total + weight * (bounty + p1);
    }

    // This position malicious, shielded until the first honest witness
    // next_offset ahead: fined.
    if position + params.next_offset <= params.queue_len {
        let mut weight = F::one();
        for i in position..position + params.next_offset {
            weight = weight * (F::one() - profile.normal(i));
        }
        weight = weight * profile.normal(position + params.next_offset);
        total = total - weight * fine;
    }

    // The whole queue malicious: the gain sticks.
    let mut all_malicious = F::one();
    for i in 1..=params.queue_len {
        all_malicious = all_malicious * (F::one() - profile.normal(i));
    }
    total = total + all_malicious * p2;

    Ok(total)
}

/// Expected profit of the witness at `position + 1` conditional on the
/// malicious branch: punished when the first honest successor appears
/// `next_offset` ahead of `position`, paid P2 when the rest of the queue
/// colludes. `position` 0 evaluates the head of the profile as the
/// deciding witness.
pub fn expected_profit_after_malicious<F: Float>(
    params: &PayoffParams<F>,
    profile: &BehaviorProfile<F>,
    position: usize,
) -> Result<F, PayoffError> {
    params.validate()?;
    profile.check_len(params)?;
    if position + 1 > params.queue_len {
        return Err(PayoffError::PositionOutOfRange {
            position,
            queue_len: params.queue_len,
        });
    }
    let p2 = params.malicious_gain;
    let fine = params.penalty();

    let mut total = F::zero();
    if position + params.next_offset <= params.queue_len {
        let mut weight = F::one();
        for i in position + 1..position + params.next_offset {
            weight = weight * (F::one() - profile.normal(i));
        }
        weight = weight * profile.normal(position + params.next_offset);
        total = total - weight * fine;
    }
    let mut all_malicious = F::one();
    for i in position + 1..=params.queue_len {
        all_malicious = all_malicious * (F::one() - profile.normal(i));
    }
    total = total + all_malicious * p2;
    Ok(total)
}

/// Expected profit of a witness that behaves normally and reports the
/// offender `prior_offset` back: `prior_offset * penalty + P1`.
pub fn expected_profit_after_normal<F: Float>(params: &PayoffParams<F>) -> F {
    F::from(params.prior_offset).expect("small integer fits") * params.penalty()
        + params.honest_profit
}

/// Nash-margin of honesty for the deciding witness at the head of the
/// profile: `E_normal - E_malicious`. Positive means honest behavior
/// dominates.
pub fn equilibrium_margin<F: Float>(
    params: &PayoffParams<F>,
    profile: &BehaviorProfile<F>,
) -> Result<F, PayoffError> {
    Ok(expected_profit_after_normal(params)
        - expected_profit_after_malicious(params, profile, 0)?)
}

/// Fault tolerance of a queue of `queue_len` witnesses: all but one may
/// misbehave, exactly `(queue_len - 1) / queue_len`.
pub fn fault_tolerance(queue_len: u64) -> Result<Ratio<u64>, PayoffError> {
    if queue_len == 0 {
        return Err(PayoffError::ZeroQueue);
    }
    Ok(Ratio::new(queue_len - 1, queue_len))
}

/// Payoff of the witness at `position` for a concrete behavior outcome
/// (`true` = behaved normally). These are the rules whose expectation is
/// [`expected_profit`]; outcomes outside the four patterns pay zero.
pub fn outcome_payoff<F: Float>(
    params: &PayoffParams<F>,
    position: usize,
    outcome: &[bool],
) -> F {
    let p1 = params.honest_profit;
    let p2 = params.malicious_gain;
    let fine = params.penalty();
    let normal = |i: usize| outcome[i - 1];

    if (1..=position).all(normal) {
        return p1;
    }
    if params.prior_offset >= 1 && position > params.prior_offset {
        let offender = position - params.prior_offset;
        if (1..=position).all(|i| normal(i) != (i == offender)) {
            let bounty = F::from(params.prior_offset).expect("small integer fits") * fine;
            return bounty + p1;
        }
    }
    if position + params.next_offset <= params.queue_len
        && (position..position + params.next_offset).all(|i| !normal(i))
        && normal(position + params.next_offset)
    {
        return -fine;
    }
    if (1..=params.queue_len).all(|i| !normal(i)) {
        return p2;
    }
    F::zero()
}

/// Monte-Carlo estimate of every position's expected profit: samples
/// behavior outcomes from the profile and averages [`outcome_payoff`].
/// Reproducible for a fixed seed.
pub fn simulate_game<F: Float>(
    params: &PayoffParams<F>,
    profile: &BehaviorProfile<F>,
    samples: usize,
    seed: u64,
) -> Result<Vec<F>, PayoffError> {
    params.validate()?;
    profile.check_len(params)?;
    if samples == 0 {
        return Err(PayoffError::ZeroSamples);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sums = vec![F::zero(); params.queue_len];
    let mut outcome = vec![false; params.queue_len];
    for _ in 0..samples {
        for (i, slot) in outcome.iter_mut().enumerate() {
            let p = profile.normal(i + 1).to_f64().expect("probability fits f64");
            *slot = rng.gen::<f64>() < p;
        }
        for position in 1..=params.queue_len {
            sums[position - 1] = sums[position - 1] + outcome_payoff(params, position, &outcome);
        }
    }
    let denom = F::from(samples).expect("sample count fits");
    Ok(sums.into_iter().map(|s| s / denom).collect())
}

/// Margin-following agents: each round every position consults the current
/// empirical profile, plays honest iff the margin is positive, and the
/// profile updates as a running mean. Burn-in rounds act randomly. Returns
/// the honest fraction of all actions after burn-in.
pub fn simulate_margin_following(
    params: &PayoffParams<f64>,
    rounds: usize,
    burn_in: usize,
    seed: u64,
) -> Result<f64, PayoffError> {
    params.validate()?;
    if rounds <= burn_in {
        return Err(PayoffError::InvalidParams(
            "rounds must exceed burn_in".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut estimate = vec![0.5f64; params.queue_len];
    let mut honest_actions = 0usize;
    let mut counted = 0usize;
    for round in 1..=rounds {
        let profile = BehaviorProfile::new(estimate.clone())?;
        let mut actions = vec![false; params.queue_len];
        for position in 1..=params.queue_len {
            let honest = if round <= burn_in {
                rng.gen::<f64>() < 0.5
            } else {
                let margin = expected_profit_after_normal(params)
                    - expected_profit_after_malicious(params, &profile, position - 1)?;
                margin > 0.0
            };
            actions[position - 1] = honest;
            if round > burn_in {
                counted += 1;
                if honest {
                    honest_actions += 1;
                }
            }
        }
        for (est, &action) in estimate.iter_mut().zip(&actions) {
            let observed = if action { 1.0 } else { 0.0 };
            *est += (observed - *est) / round as f64;
        }
    }
    Ok(honest_actions as f64 / counted as f64)
}

/// One cell of the margin grid emitted by the `payoff` CLI.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginGridPoint {
    pub p1: f64,
    pub p2: f64,
    pub rho: u32,
    pub margin: f64,
}

/// Margins over a (P1, P2, rho) grid against a uniform successor profile.
pub fn margin_grid(
    p1_values: &[f64],
    p2_values: &[f64],
    rho_values: &[u32],
    queue_len: usize,
    prior_offset: usize,
    next_offset: usize,
    honesty: f64,
) -> Result<Vec<MarginGridPoint>, PayoffError> {
    let profile = BehaviorProfile::uniform(queue_len, honesty)?;
    let mut out = Vec::new();
    for &p1 in p1_values {
        for &p2 in p2_values {
            for &rho in rho_values {
                let params = PayoffParams {
                    honest_profit: p1,
                    malicious_gain: p2,
                    penalty_multiplier: rho,
                    queue_len,
                    prior_offset,
                    next_offset,
                };
                out.push(MarginGridPoint {
                    p1,
                    p2,
                    rho,
                    margin: equilibrium_margin(&params, &profile)?,
                });
            }
        }
    }
    Ok(out)
}
