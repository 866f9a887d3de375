//! Scenario files (TOML). Unknown keys are rejected everywhere.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::LatencyModel;
use crate::authority::{AuthorityConfig, WorkTemplate};
use crate::chain::ChainRules;
use crate::miner::MinerBehavior;
use crate::rng::{domain, stream_seed};
use crate::verification::{ReplicationConfig, Strategy, DEFAULT_BINS, DEFAULT_CHI2_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub seed: u64,
    pub rounds: u64,
    #[serde(default = "default_interval")]
    pub round_interval: u64,
    #[serde(default = "default_reward")]
    pub block_reward: u64,
    #[serde(default)]
    pub tx_cap: Option<usize>,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    /// Strikes before a ban; 0 disables bans.
    #[serde(default = "default_strikes")]
    pub ban_strikes: u32,
    #[serde(default = "default_true")]
    pub serve_data: bool,
    /// Tip announcements sent after the last block so lagging nodes sync.
    #[serde(default = "default_settle")]
    pub settle_rounds: u32,
    #[serde(default)]
    pub replication: ReplicationConfig,
    #[serde(default)]
    pub reference: ReferenceSettings,
    pub work: WorkSettings,
    #[serde(default)]
    pub difficulty: Option<DifficultySettings>,
    #[serde(default)]
    pub network: LatencyModel,
    #[serde(default)]
    pub workload: WorkloadSettings,
    #[serde(default)]
    pub audit: AuditSettings,
    pub miners: Vec<MinerGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceSettings {
    pub chi2_threshold: f64,
    pub bins: usize,
    pub slope_shift: f64,
}

impl Default for ReferenceSettings {
    fn default() -> Self {
        ReferenceSettings { chi2_threshold: DEFAULT_CHI2_THRESHOLD, bins: DEFAULT_BINS, slope_shift: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkSettings {
    /// Number of detector configurations `C`.
    pub configs: u32,
    pub n_events: u32,
    pub beam_energy: f64,
    /// Initial energy cut.
    pub energy_cut: f64,
    pub n_layers: u32,
    #[serde(default = "default_smear")]
    pub smear_sigma: f64,
    #[serde(default)]
    pub smear_step: f64,
    pub split_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifficultySettings {
    /// Desired total step count per round.
    pub target_cost: f64,
    /// Rounds per retarget; the cut is updated from their mean cost.
    #[serde(default = "default_window")]
    pub window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadSettings {
    /// Transfers attempted at the start of each round.
    pub tx_per_round: u32,
    pub max_amount: u64,
}

impl Default for WorkloadSettings {
    fn default() -> Self {
        WorkloadSettings { tx_per_round: 0, max_amount: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSettings {
    /// Miners query their own balance after each block.
    pub balance_queries: bool,
    /// Miners fetch the data behind each block.
    pub data_requests: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinerGroup {
    #[serde(default = "default_count")]
    pub count: u32,
    /// Cost units per tick.
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default = "default_behavior")]
    pub behavior: MinerBehavior,
    #[serde(default)]
    pub offline: bool,
}

fn default_name() -> String {
    "scenario".into()
}
fn default_interval() -> u64 {
    1000
}
fn default_reward() -> u64 {
    1
}
fn default_strategy() -> Strategy {
    Strategy::Replication
}
fn default_strikes() -> u32 {
    2
}
fn default_true() -> bool {
    true
}
fn default_settle() -> u32 {
    10
}
fn default_smear() -> f64 {
    0.01
}
fn default_window() -> usize {
    1
}
fn default_count() -> u32 {
    1
}
fn default_speed() -> f64 {
    100.0
}
fn default_behavior() -> MinerBehavior {
    MinerBehavior::Honest
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

/// One roster slot after expanding group counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RosterEntry {
    pub index: u32,
    pub behavior: MinerBehavior,
    pub speed: f64,
    pub offline: bool,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn template(&self) -> WorkTemplate {
        let w = &self.work;
        WorkTemplate {
            n_configs: w.configs,
            n_events: w.n_events,
            beam_energy: w.beam_energy,
            n_layers: w.n_layers,
            smear_sigma: w.smear_sigma,
            smear_step: w.smear_step,
            split_scale: w.split_scale,
        }
    }

    pub fn rules(&self) -> ChainRules {
        ChainRules { block_reward: self.block_reward, tx_cap: self.tx_cap }
    }

    pub fn authority_config(&self) -> AuthorityConfig {
        AuthorityConfig {
            rules: self.rules(),
            strategy: self.strategy,
            replication: self.replication,
            chi2_threshold: self.reference.chi2_threshold,
            reference_bins: self.reference.bins,
            slope_shift: self.reference.slope_shift,
            ban_strikes: self.ban_strikes,
            serve_data: self.serve_data,
            round_interval: self.round_interval,
            template: self.template(),
            energy_cut: self.work.energy_cut,
            difficulty: self.difficulty.map(|d| (d.target_cost, d.window)),
            secret_seed: stream_seed(self.seed, &[domain::DECOY, domain::TRUTH]),
        }
    }

    pub fn roster(&self) -> Vec<RosterEntry> {
        let mut out = Vec::new();
        for g in &self.miners {
            for _ in 0..g.count {
                out.push(RosterEntry {
                    index: out.len() as u32,
                    behavior: g.behavior.clone(),
                    speed: g.speed,
                    offline: g.offline,
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.round_interval < 2 {
            return bad("round_interval must be at least 2 ticks".into());
        }
        if self.strategy == Strategy::AuthorityCompute {
            return bad("authority_compute is the fallback terminal, not a selectable strategy".into());
        }
        self.replication.validate().map_err(ScenarioError::Invalid)?;
        if !(self.reference.chi2_threshold > 1.0) {
            return bad(format!("reference.chi2_threshold must exceed 1, got {}", self.reference.chi2_threshold));
        }
        if self.reference.bins < 8 {
            return bad(format!("reference.bins must be at least 8, got {}", self.reference.bins));
        }
        if !self.reference.slope_shift.is_finite() {
            return bad("reference.slope_shift must be finite".into());
        }
        if self.work.n_events == 0 {
            return bad("work.n_events must be at least 1".into());
        }
        self.template()
            .params(0, self.work.energy_cut)
            .validate()
            .map_err(|e| ScenarioError::Invalid(format!("work: {e}")))?;
        if let Some(d) = self.difficulty {
            if !(d.target_cost > 0.0 && d.target_cost.is_finite()) || d.window == 0 {
                return bad("difficulty needs target_cost > 0 and window >= 1".into());
            }
        }
        self.network.validate().map_err(|e| ScenarioError::Invalid(format!("network: {e}")))?;
        if self.workload.max_amount == 0 {
            return bad("workload.max_amount must be at least 1".into());
        }
        let total: u32 = self.miners.iter().map(|g| g.count).sum();
        for (i, g) in self.miners.iter().enumerate() {
            if !(g.speed > 0.0 && g.speed.is_finite()) {
                return bad(format!("miners[{i}].speed must be positive"));
            }
            g.behavior
                .validate(self.work.configs)
                .map_err(|e| ScenarioError::Invalid(format!("miners[{i}]: {e}")))?;
        }
        for p in &self.network.partitions {
            if let Some(n) = p.nodes.iter().find(|&&n| n >= total) {
                return bad(format!("partition names miner {n}, roster has {total}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        seed = 1
        rounds = 3
        [work]
        configs = 2
        n_events = 4
        beam_energy = 5.0
        energy_cut = 1.0
        n_layers = 4
        split_scale = 5.0
        [[miners]]
        count = 3
    "#;

    #[test]
    fn minimal_file_takes_defaults() {
        let cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.round_interval, 1000);
        assert_eq!(cfg.strategy, Strategy::Replication);
        assert_eq!(cfg.roster().len(), 3);
        assert_eq!(cfg.roster()[2].behavior, MinerBehavior::Honest);
        assert_eq!(cfg.network, LatencyModel::default());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        let again = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(matches!(ScenarioConfig::from_toml_str(&text), Err(ScenarioError::Parse(_))));
        let nested = MINIMAL.replace("n_layers = 4", "n_layers = 4\nlayers = 9");
        assert!(matches!(ScenarioConfig::from_toml_str(&nested), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn invalid_values_rejected() {
        for (from, to) in [
            ("rounds = 3", "rounds = 0"),
            ("n_layers = 4", "n_layers = 1"),
            ("energy_cut = 1.0", "energy_cut = -1.0"),
            ("count = 3", "count = 3\nspeed = 0.0"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(matches!(ScenarioConfig::from_toml_str(&text), Err(ScenarioError::Invalid(_))), "{to}");
        }
        let quorum = format!("{MINIMAL}\n[replication]\nmin_quorum = 4\ntarget_nresults = 3\n");
        assert!(ScenarioConfig::from_toml_str(&quorum).is_err());
        let drop = format!("{MINIMAL}\n[network]\ndrop_rate = 1.0\n");
        assert!(ScenarioConfig::from_toml_str(&drop).is_err());
        let part = format!("{MINIMAL}\n[[network.partitions]]\nnodes = [7]\nstart = 0\nend = 5\n");
        assert!(ScenarioConfig::from_toml_str(&part).is_err());
    }
}
