//! Simulated miners: the honest policy and the adversary families.

mod fabricate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::{Address, AuthKey, Block, ChainRules, ChainState, KeyRing, Transaction, ValidationError};
use crate::rng::{domain, stream_seed, SplitMix64};
use crate::verification::{ReferenceDataset, Submission};
use crate::work::{estimate_cost, run_config, PipelineCache, SimulationParameters, SimulationResult};

pub use fabricate::{fabricate_config, resample_reference, FAKE_HIT_SCATTER};

/// Factor applied to `energy_cut` by the wrong-parameter adversary.
pub const WRONG_PARAMS_CUT_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "BehaviorSpec")]
pub enum MinerBehavior {
    Honest,
    /// Every config made up.
    FabricateAll,
    /// Correct output for `k_correct` configs, fabricated elsewhere.
    /// Members of one `group` share the subset and the fabrication.
    PartialFabricate {
        k_correct: u32,
        group: Option<u32>,
    },
    /// Group members submit byte-identical fabricated results.
    SybilColluder { group_id: u32, fabrication_seed: u64 },
    /// Submits at once with a mutated energy cut.
    WrongParams,
    /// Builds its result from the authority's reference data.
    ReferenceOracleCheat,
}

/// Flat, strict form of [`MinerBehavior`] as written in scenario files.
/// Serde ignores stray keys on unit variants of tagged enums, so parsing
/// goes through this struct and rejects fields the kind does not take.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BehaviorSpec {
    kind: String,
    k_correct: Option<u32>,
    group: Option<u32>,
    group_id: Option<u32>,
    fabrication_seed: Option<u64>,
}

impl TryFrom<BehaviorSpec> for MinerBehavior {
    type Error = String;

    fn try_from(s: BehaviorSpec) -> Result<Self, String> {
        let (behavior, allowed): (_, &[&str]) = match s.kind.as_str() {
            "honest" => (MinerBehavior::Honest, &[]),
            "fabricate_all" => (MinerBehavior::FabricateAll, &[]),
            "wrong_params" => (MinerBehavior::WrongParams, &[]),
            "reference_oracle_cheat" => (MinerBehavior::ReferenceOracleCheat, &[]),
            "partial_fabricate" => (
                MinerBehavior::PartialFabricate {
                    k_correct: s.k_correct.ok_or("partial_fabricate needs k_correct")?,
                    group: s.group,
                },
                &["k_correct", "group"],
            ),
            "sybil_colluder" => (
                MinerBehavior::SybilColluder {
                    group_id: s.group_id.ok_or("sybil_colluder needs group_id")?,
                    fabrication_seed: s.fabrication_seed.unwrap_or(0),
                },
                &["group_id", "fabrication_seed"],
            ),
            other => return Err(format!("unknown miner kind {other:?}")),
        };
        let present = [
            ("k_correct", s.k_correct.is_some()),
            ("group", s.group.is_some()),
            ("group_id", s.group_id.is_some()),
            ("fabrication_seed", s.fabrication_seed.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(format!("field {name:?} does not apply to kind {:?}", s.kind));
            }
        }
        Ok(behavior)
    }
}

impl MinerBehavior {
    /// Adversary class label used in summaries.
    pub fn class(&self) -> &'static str {
        match self {
            MinerBehavior::Honest => "honest",
            MinerBehavior::FabricateAll => "fabricate_all",
            MinerBehavior::PartialFabricate { .. } => "partial_fabricate",
            MinerBehavior::SybilColluder { .. } => "sybil_colluder",
            MinerBehavior::WrongParams => "wrong_params",
            MinerBehavior::ReferenceOracleCheat => "reference_oracle_cheat",
        }
    }

    pub fn needs_reference(&self) -> bool {
        matches!(self, MinerBehavior::ReferenceOracleCheat)
    }

    pub fn validate(&self, n_configs: u32) -> Result<(), String> {
        match *self {
            MinerBehavior::PartialFabricate { k_correct, .. } if k_correct > n_configs => {
                Err(format!("k_correct {k_correct} exceeds config count {n_configs}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BlockRejection {
    #[error("block not sent by the authority")]
    NotFromAuthority,
    #[error("invalid block: {0}")]
    Invalid(ValidationError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockOutcome {
    /// Number of blocks appended, including buffered successors.
    Applied(usize),
    /// Already held.
    Duplicate,
    /// Ahead of the local tip; buffered until the gap is filled.
    Gap { have: u64, got: u64 },
    Rejected(BlockRejection),
}

pub struct MinerNode {
    pub index: u32,
    pub address: Address,
    key: AuthKey,
    pub behavior: MinerBehavior,
    /// Cost units per tick.
    pub compute_speed: f64,
    pub offline: bool,
    pub local_chain: ChainState,
    keys: KeyRing,
    authority: Address,
    next_nonce: u64,
    pending: BTreeMap<u64, Block>,
    pub rejected_blocks: Vec<(u64, BlockRejection)>,
}

impl MinerNode {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        index: u32,
        address: Address,
        key: AuthKey,
        behavior: MinerBehavior,
        compute_speed: f64,
        rules: ChainRules,
        keys: KeyRing,
        authority: Address,
    ) -> Self {
        assert!(compute_speed > 0.0, "compute speed must be positive");
        MinerNode {
            index,
            address,
            key,
            behavior,
            compute_speed,
            offline: false,
            local_chain: ChainState::new(rules),
            keys,
            authority,
            next_nonce: 0,
            pending: BTreeMap::new(),
            rejected_blocks: Vec::new(),
        }
    }

    /// Tick at which this node's submission is ready, or `None` if it will
    /// not submit for this round.
    pub fn on_params(&self, params: &SimulationParameters, now: u64, deadline: u64) -> Option<u64> {
        self.on_params_with_cost(params, estimate_cost(params), now, deadline)
    }

    /// [`on_params`](Self::on_params) with the full-problem cost estimate
    /// supplied by the caller, so it is computed once per round.
    pub fn on_params_with_cost(
        &self,
        params: &SimulationParameters,
        cost: f64,
        now: u64,
        deadline: u64,
    ) -> Option<u64> {
        if self.offline {
            return None;
        }
        let work = match &self.behavior {
            MinerBehavior::Honest => cost,
            MinerBehavior::PartialFabricate { k_correct, .. } => {
                cost * *k_correct as f64 / params.configs.len() as f64
            }
            _ => 0.0,
        };
        let ticks = ((work / self.compute_speed).ceil() as u64).max(1);
        let ready = now + ticks;
        (ready < deadline).then_some(ready)
    }

    /// Build this node's submission for block `number`.
    pub fn compute_solution(
        &self,
        params: &SimulationParameters,
        number: u64,
        cache: &mut PipelineCache,
        reference: Option<&ReferenceDataset>,
    ) -> Submission {
        let seed = params.work_seed;
        let own = address_seed(&self.address);
        let mut params_echo = params.clone();
        let result = match &self.behavior {
            MinerBehavior::Honest => cache.get_or_run(params),
            MinerBehavior::FabricateAll => fabricate_all(params, &[own, seed]),
            MinerBehavior::SybilColluder { group_id, fabrication_seed } => {
                fabricate_all(params, &[*fabrication_seed, *group_id as u64, seed])
            }
            MinerBehavior::PartialFabricate { k_correct, group } => {
                let base = match group {
                    Some(g) => stream_seed(*g as u64, &[domain::FABRICATE]),
                    None => own,
                };
                let c = params.configs.len();
                let honest = SplitMix64::keyed(base, &[domain::SUBSET, seed]).subset(c, *k_correct as usize);
                let per_config = params
                    .configs
                    .iter()
                    .map(|cfg| {
                        if honest.contains(&(cfg.index as usize)) {
                            run_config(params, cfg)
                        } else {
                            let mut rng = SplitMix64::keyed(base, &[domain::FABRICATE, seed, cfg.index as u64]);
                            fabricate_config(params, cfg.index, &mut rng)
                        }
                    })
                    .collect();
                SimulationResult::new(per_config)
            }
            MinerBehavior::WrongParams => {
                params_echo.energy_cut *= WRONG_PARAMS_CUT_FACTOR;
                fabricate_all(params, &[own, seed])
            }
            MinerBehavior::ReferenceOracleCheat => match reference {
                Some(r) => {
                    let mut rng = SplitMix64::keyed(own, &[domain::FABRICATE, seed]);
                    SimulationResult::new(
                        params.configs.iter().map(|c| resample_reference(r, c.index, &mut rng)).collect(),
                    )
                }
                None => fabricate_all(params, &[own, seed]),
            },
        };
        Submission { miner: self.address, block_number: number, params_echo, result }
    }

    /// Validate and append a block received from `from`.
    pub fn on_block(&mut self, block: Block, from: Address) -> BlockOutcome {
        if from != self.authority {
            self.rejected_blocks.push((block.number, BlockRejection::NotFromAuthority));
            return BlockOutcome::Rejected(BlockRejection::NotFromAuthority);
        }
        let height = self.local_chain.height();
        if block.number <= height {
            return BlockOutcome::Duplicate;
        }
        if block.number > height + 1 {
            let got = block.number;
            self.pending.insert(got, block);
            return BlockOutcome::Gap { have: height, got };
        }
        if let Err(e) = self.local_chain.apply_block(block.clone(), &self.keys) {
            let rejection = BlockRejection::Invalid(e);
            self.rejected_blocks.push((block.number, rejection.clone()));
            return BlockOutcome::Rejected(rejection);
        }
        let mut applied = 1;
        while let Some(next) = self.pending.remove(&(self.local_chain.height() + 1)) {
            if self.local_chain.apply_block(next, &self.keys).is_err() {
                break;
            }
            applied += 1;
        }
        self.pending.retain(|&n, _| n > self.local_chain.height());
        BlockOutcome::Applied(applied)
    }

    /// Signed transfer using this node's next nonce.
    pub fn make_transfer(&mut self, to: Address, amount: u64) -> Transaction {
        let tx = Transaction::signed(self.address, to, amount, self.next_nonce, &self.key);
        self.next_nonce += 1;
        tx
    }

    /// Compare an authority balance reply with the local chain. `None` when
    /// the local chain is at a different height.
    pub fn check_balance_reply(&self, address: &Address, balance: u64, as_of_height: u64) -> Option<bool> {
        (self.local_chain.height() == as_of_height).then(|| self.local_chain.balance(address) == balance)
    }
}

fn address_seed(address: &Address) -> u64 {
    u64::from_be_bytes(address.0[..8].try_into().expect("8 bytes"))
}

fn fabricate_all(params: &SimulationParameters, keys: &[u64]) -> SimulationResult {
    let root = stream_seed(keys[0], &keys[1..]);
    SimulationResult::new(
        params
            .configs
            .iter()
            .map(|c| {
                let mut rng = SplitMix64::keyed(root, &[domain::FABRICATE, c.index as u64]);
                fabricate_config(params, c.index, &mut rng)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests;
