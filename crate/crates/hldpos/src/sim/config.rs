//! Scenario configuration: a flat key/value document (TOML) mirroring the
//! simulator's knobs, with an `[engine]` section for the token economy and
//! an `[adversary]` section for scripted behaviors. Unknown keys are
//! rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryError, AdversarySpec, Behavior};
use crate::engine::{DposBaselineConfig, EngineConfig, PowBaselineConfig};
use crate::sim::SimError;
use crate::vrf::CurveParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pow,
    Dpos,
    Hldpos,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::Pow => "pow",
            Algorithm::Dpos => "dpos",
            Algorithm::Hldpos => "hldpos",
        };
        f.write_str(name)
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pow" => Ok(Algorithm::Pow),
            "dpos" => Ok(Algorithm::Dpos),
            "hldpos" => Ok(Algorithm::Hldpos),
            other => Err(format!("unknown algorithm '{other}' (pow|dpos|hldpos)")),
        }
    }
}

/// Which curve backs the VRF. Simulations default to the small fast curve;
/// secp256k1 is available when full-size key material matters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveChoice {
    Secp256k1,
    ToyMedium,
    ToyTiny,
}

impl CurveChoice {
    pub fn params(&self) -> CurveParams {
        match self {
            CurveChoice::Secp256k1 => CurveParams::secp256k1(),
            CurveChoice::ToyMedium => CurveParams::toy_medium(),
            CurveChoice::ToyTiny => CurveParams::toy_tiny(),
        }
    }
}

/// One scripted malicious node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaliciousEntry {
    pub node: u64,
    pub behavior: Behavior,
}

/// Adversary section of the scenario config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdversaryConfig {
    pub malicious: Vec<MaliciousEntry>,
    pub from_round: u64,
    pub to_round: u64,
    pub fork_extension: u64,
}

impl Default for AdversaryConfig {
    fn default() -> Self {
        AdversaryConfig {
            malicious: Vec::new(),
            from_round: 1,
            to_round: u64::MAX,
            fork_extension: 1,
        }
    }
}

impl AdversaryConfig {
    pub fn to_spec(&self) -> Result<AdversarySpec, AdversaryError> {
        if self.malicious.is_empty() {
            return Ok(AdversarySpec::none());
        }
        let kinds: BTreeMap<_, _> = self
            .malicious
            .iter()
            .map(|e| (crate::types::NodeId(e.node), e.behavior))
            .collect();
        let mut spec = AdversarySpec::new(kinds, self.from_round, self.to_round)?;
        spec.fork_extension = self.fork_extension;
        Ok(spec)
    }
}

/// Full scenario description. Field defaults reproduce the reference
/// experiment setup: 120 HL-DPoS witnesses in 10 groups, 101 DPoS
/// witnesses, 12.42 s slots, 600 s PoW intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Scenario label; derived from the other fields when omitted.
    pub id: Option<String>,
    pub algo: Algorithm,
    pub nodes: usize,
    pub minutes: f64,
    pub seed: u64,
    /// Number of groups (HL-DPoS only).
    pub groups: u32,
    /// Representatives per group, half voted and half random.
    pub reps_per_group: u32,
    /// Fixed re-entry cooldown in rounds; when absent the cooldown derives
    /// from group size via `rho`.
    pub psi: Option<u64>,
    pub rho: f64,
    pub window_sigma: f64,
    pub window_tau: f64,
    /// Regroup every this many rounds.
    pub epoch_rounds: u64,
    /// Shared-pool transaction arrival rate, tx/s.
    pub tx_rate: f64,
    pub latency_median_ms: f64,
    pub latency_sigma: f64,
    pub curve: CurveChoice,
    pub initial_balance: u64,
    pub stake_max: u64,
    pub engine: EngineConfig,
    pub dpos: DposBaselineConfig,
    pub pow: PowBaselineConfig,
    pub adversary: AdversaryConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            id: None,
            algo: Algorithm::Hldpos,
            nodes: 1000,
            minutes: 10.0,
            seed: 42,
            groups: 10,
            reps_per_group: 12,
            psi: Some(0),
            rho: 0.2,
            window_sigma: 0.0,
            window_tau: 0.5,
            epoch_rounds: 1,
            tx_rate: 2.0,
            latency_median_ms: 100.0,
            latency_sigma: 0.5,
            curve: CurveChoice::ToyMedium,
            initial_balance: 1000,
            stake_max: 1_000_000,
            engine: EngineConfig::default(),
            dpos: DposBaselineConfig::default(),
            pow: PowBaselineConfig::default(),
            adversary: AdversaryConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let config: SimConfig =
            toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.nodes < 2 {
            return Err(SimError::Config("nodes must be at least 2".into()));
        }
        if !(self.minutes > 0.0) {
            return Err(SimError::Config("minutes must be positive".into()));
        }
        if self.tx_rate < 0.0 {
            return Err(SimError::Config("tx_rate must be non-negative".into()));
        }
        if self.epoch_rounds == 0 {
            return Err(SimError::Config("epoch_rounds must be at least 1".into()));
        }
        self.engine
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))?;
        match self.algo {
            Algorithm::Hldpos => {
                if self.groups == 0 {
                    return Err(SimError::Config("groups must be at least 1".into()));
                }
                if self.reps_per_group == 0 || self.reps_per_group % 2 != 0 {
                    return Err(SimError::Config(
                        "reps_per_group must be a positive even number".into(),
                    ));
                }
                let required = 2 * self.groups as usize * self.reps_per_group as usize;
                if self.nodes < required {
                    return Err(SimError::Config(format!(
                        "hldpos needs nodes >= 2 * groups * reps_per_group = {required}, got {}",
                        self.nodes
                    )));
                }
                if !(self.window_sigma >= 0.0
                    && self.window_sigma < self.window_tau
                    && self.window_tau <= 0.5)
                {
                    return Err(SimError::Config(format!(
                        "window must satisfy 0 <= sigma < tau <= 0.5, got ({}, {})",
                        self.window_sigma, self.window_tau
                    )));
                }
            }
            Algorithm::Dpos => {
                if self.nodes < self.dpos.witness_count {
                    return Err(SimError::Config(format!(
                        "dpos needs nodes >= witness_count ({}), got {}",
                        self.dpos.witness_count, self.nodes
                    )));
                }
            }
            Algorithm::Pow => {}
        }
        self.adversary
            .to_spec()
            .map_err(|e| SimError::Config(e.to_string()))?;
        Ok(())
    }

    /// Fixed cooldown if configured, otherwise the nominal derived value
    /// `ceil(group_size * rho)` for the average group.
    pub fn effective_psi(&self) -> u64 {
        self.psi.unwrap_or_else(|| {
            let group_size = self.nodes as f64 / self.groups.max(1) as f64;
            (group_size * self.rho).ceil() as u64
        })
    }

    pub fn scenario_id(&self) -> String {
        self.id.clone().unwrap_or_else(|| {
            format!(
                "{}-n{}-m{}-s{}-psi{}",
                self.algo,
                self.nodes,
                self.minutes,
                self.seed,
                self.effective_psi()
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_roundtrip_and_overrides() {
        let text = r#"
            algo = "dpos"
            nodes = 500
            minutes = 20.0
            seed = 7
        "#;
        let config = SimConfig::from_toml_str(text).unwrap();
        assert_eq!(config.algo, Algorithm::Dpos);
        assert_eq!(config.nodes, 500);
        assert_eq!(config.minutes, 20.0);
        assert_eq!(config.seed, 7);
        // Unchanged defaults.
        assert_eq!(config.groups, 10);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = SimConfig::from_toml_str("algoz = \"dpos\"").unwrap_err();
        assert!(err.to_string().contains("algoz"), "{err}");
        let err = SimConfig::from_toml_str("[engine]\nbad_key = 1").unwrap_err();
        assert!(err.to_string().contains("bad_key"), "{err}");
    }

    #[test]
    fn adversary_section_parses() {
        let text = r#"
            nodes = 480
            [adversary]
            malicious = [{ node = 3, behavior = "hide_own_tx_fork" }]
            from_round = 2
            to_round = 50
        "#;
        let config = SimConfig::from_toml_str(text).unwrap();
        let spec = config.adversary.to_spec().unwrap();
        assert!(spec.is_malicious(crate::types::NodeId(3)));
        assert_eq!(spec.from_round, 2);
    }

    #[test]
    fn undersized_hldpos_rejected() {
        let mut config = SimConfig::default();
        config.nodes = 100; // < 2 * 10 * 12
        assert!(config.validate().is_err());
    }

    #[test]
    fn scenario_id_derivation() {
        let config = SimConfig::default();
        assert_eq!(config.scenario_id(), "hldpos-n1000-m10-s42-psi0");
        let mut named = SimConfig::default();
        named.id = Some("custom".into());
        assert_eq!(named.scenario_id(), "custom");
        let mut derived = SimConfig::default();
        derived.psi = None;
        assert_eq!(derived.effective_psi(), 20); // ceil(100 * 0.2)
    }
}
