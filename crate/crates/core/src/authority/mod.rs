//! The root authority: sole block producer. It registers miners, issues
//! work parameters each round, takes submissions, runs verification with
//! fallback, draws the winner and mints the block.

mod difficulty;
mod registry;
mod store;
mod txpool;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chain::{
    derive_work_seed, Address, Block, ChainRules, ChainState, HashDigest, KeyRing, Transaction,
    ValidationError,
};
use crate::rng::{domain, stream_seed, SplitMix64};
use crate::verification::{
    run_with_fallback, verify_decoy, verify_reference_all, verify_replication, DecoySpec,
    FallbackOutcome, ReferenceDataset, ReplicationConfig, Strategy, Submission, Verdict,
    VerifyError, DEFAULT_BINS, DEFAULT_CHI2_THRESHOLD,
};
use crate::work::{ConfigFlag, PipelineCache, SimulationParameters, SimulationResult};

pub use difficulty::{DifficultyController, MAX_FACTOR, MIN_FACTOR};
pub use registry::{BanRecord, MinerRegistry, RegistryEntry, RegistryError};
pub use store::{DataError, DataStore};
pub use txpool::TxPool;

/// Round-invariant part of the work parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkTemplate {
    pub n_configs: u32,
    pub n_events: u32,
    pub beam_energy: f64,
    pub n_layers: u32,
    /// Resolution of config 0; config `i` uses `smear_sigma + i * smear_step`.
    pub smear_sigma: f64,
    pub smear_step: f64,
    pub split_scale: f64,
}

impl WorkTemplate {
    pub fn params(&self, work_seed: u64, energy_cut: f64) -> SimulationParameters {
        SimulationParameters {
            work_seed,
            n_events: self.n_events,
            beam_energy: self.beam_energy,
            energy_cut,
            n_layers: self.n_layers,
            configs: (0..self.n_configs)
                .map(|index| ConfigFlag {
                    index,
                    smear_sigma: self.smear_sigma + index as f64 * self.smear_step,
                    split_scale: self.split_scale,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorityConfig {
    pub rules: ChainRules,
    pub strategy: Strategy,
    pub replication: ReplicationConfig,
    pub chi2_threshold: f64,
    pub reference_bins: usize,
    /// Displacement of the reference slope distribution ("new physics").
    pub slope_shift: f64,
    /// Strikes before a ban; 0 disables bans.
    pub ban_strikes: u32,
    pub serve_data: bool,
    pub round_interval: u64,
    pub template: WorkTemplate,
    pub energy_cut: f64,
    /// `(target_cost, window)` for the closed-loop cut controller.
    pub difficulty: Option<(f64, usize)>,
    /// Private seed for decoy choice and reference truth runs.
    pub secret_seed: u64,
}

impl AuthorityConfig {
    pub fn new(template: WorkTemplate, energy_cut: f64) -> Self {
        AuthorityConfig {
            rules: ChainRules::default(),
            strategy: Strategy::Replication,
            replication: ReplicationConfig::default(),
            chi2_threshold: DEFAULT_CHI2_THRESHOLD,
            reference_bins: DEFAULT_BINS,
            slope_shift: 0.0,
            ban_strikes: 2,
            serve_data: true,
            round_interval: 1000,
            template,
            energy_cut,
            difficulty: None,
            secret_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "snake_case")]
pub enum IntakeError {
    #[error("sender is not a registered miner")]
    Unregistered,
    #[error("sender is banned")]
    Banned,
    #[error("no open round for this block, or deadline passed")]
    Late,
    #[error("miner already submitted for this block")]
    DuplicateSubmission,
    #[error("parameters differ from those issued")]
    WrongParams,
    #[error("result digest does not match its content")]
    CorruptResult,
}

impl IntakeError {
    /// Intake failures that count as a strike.
    pub fn is_strike(&self) -> bool {
        matches!(self, IntakeError::WrongParams | IntakeError::CorruptResult)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "snake_case")]
pub enum TxRejection {
    #[error("sender is not registered")]
    Unregistered,
    #[error("sender is banned")]
    Banned,
    #[error("auth tag does not verify")]
    BadAuthTag,
    #[error("zero amount")]
    ZeroAmount,
}

#[derive(Debug, Clone)]
pub struct RoundState {
    pub number: u64,
    pub params: SimulationParameters,
    pub opened_at: u64,
    pub deadline: u64,
    pub submissions: BTreeMap<Address, Submission>,
    /// Miners that attempted a submission, whether or not it was stored.
    attempted: BTreeSet<Address>,
    pub decoy: Option<DecoySpec>,
    pub reference: Option<ReferenceDataset>,
}

/// Everything that happened when a round closed.
#[derive(Debug, Clone)]
pub struct RoundReport {
    pub block: Block,
    pub outcome: FallbackOutcome,
    pub submissions: usize,
    /// `(provider, digest, total steps)` for every accepted result; the
    /// provider is the root address when the authority computed it.
    pub accepted_results: Vec<(Address, HashDigest, u64)>,
    pub decoy_index: Option<u32>,
    /// Transactions removed at assembly because they no longer validated.
    pub dropped_transactions: Vec<(Transaction, ValidationError)>,
    pub newly_banned: Vec<Address>,
    pub energy_cut: f64,
    pub round_ticks: u64,
}

impl RoundReport {
    pub fn strategy_used(&self) -> Strategy {
        self.outcome.verdict.strategy_used
    }
}

pub struct Authority {
    pub config: AuthorityConfig,
    pub chain: ChainState,
    pub registry: MinerRegistry,
    pub store: DataStore,
    pub pool: TxPool,
    pub controller: Option<DifficultyController>,
    pub bans: Vec<BanRecord>,
    round: Option<RoundState>,
}

impl Authority {
    pub fn new(config: AuthorityConfig) -> Self {
        let controller = config
            .difficulty
            .map(|(target, window)| DifficultyController::new(target, config.energy_cut, window));
        Authority {
            chain: ChainState::new(config.rules),
            registry: MinerRegistry::new(),
            store: DataStore::new(config.serve_data),
            pool: TxPool::new(config.rules.tx_cap),
            controller,
            bans: Vec::new(),
            round: None,
            config,
        }
    }

    pub fn address(&self) -> Address {
        Address::ROOT
    }

    pub fn keyring(&self) -> KeyRing {
        self.registry.keyring()
    }

    pub fn energy_cut(&self) -> f64 {
        self.controller.as_ref().map_or(self.config.energy_cut, |c| c.energy_cut)
    }

    /// Parameters for the block after the current tip. Pure in the tip and
    /// controller state, so repeated calls agree.
    pub fn issue_parameters(&self) -> SimulationParameters {
        let number = self.chain.height() + 1;
        let seed = derive_work_seed(&self.chain.tip_hash(), number);
        self.config.template.params(seed, self.energy_cut())
    }

    pub fn round(&self) -> Option<&RoundState> {
        self.round.as_ref()
    }

    /// Open the next round at tick `now`; its deadline is one interval later.
    pub fn open_round(&mut self, now: u64) -> &RoundState {
        assert!(self.round.is_none(), "previous round still open");
        let round = RoundState {
            number: self.chain.height() + 1,
            params: self.issue_parameters(),
            opened_at: now,
            deadline: now + self.config.round_interval,
            submissions: BTreeMap::new(),
            attempted: BTreeSet::new(),
            decoy: None,
            reference: None,
        };
        self.round.insert(round)
    }

    /// Reference data for the open round, generated on first use.
    pub fn reference_data(&mut self) -> Option<&ReferenceDataset> {
        let secret = self.config.secret_seed;
        let (bins, shift) = (self.config.reference_bins, self.config.slope_shift);
        let round = self.round.as_mut()?;
        if round.reference.is_none() {
            let truth_seed = stream_seed(secret, &[domain::TRUTH, round.number]);
            let reference = ReferenceDataset::generate(&round.params, truth_seed, bins, shift)
                .expect("issued parameters are valid");
            round.reference = Some(reference);
        }
        round.reference.as_ref()
    }

    fn decoy(&mut self) -> Option<&DecoySpec> {
        let secret = self.config.secret_seed;
        let round = self.round.as_mut()?;
        if round.decoy.is_none() {
            let mut rng = SplitMix64::keyed(secret, &[domain::DECOY, round.number]);
            round.decoy = Some(DecoySpec::draw(&round.params, &mut rng));
        }
        round.decoy.as_ref()
    }

    /// Intake check for one submission arriving at tick `now`.
    pub fn accept_submission(&mut self, sub: Submission, now: u64) -> Result<(), IntakeError> {
        let entry = self.registry.get(&sub.miner).ok_or(IntakeError::Unregistered)?;
        if entry.banned {
            return Err(IntakeError::Banned);
        }
        let round = match self.round.as_mut() {
            Some(r) if r.number == sub.block_number && now < r.deadline => r,
            _ => return Err(IntakeError::Late),
        };
        if !round.attempted.insert(sub.miner) {
            return Err(IntakeError::DuplicateSubmission);
        }
        let verdict = if sub.params_echo != round.params {
            Err(IntakeError::WrongParams)
        } else if !sub.result.digest_is_consistent() {
            Err(IntakeError::CorruptResult)
        } else {
            round.submissions.insert(sub.miner, sub.clone());
            Ok(())
        };
        if let Err(e) = &verdict {
            if e.is_strike() {
                self.strike(sub.miner, e.to_string());
            }
        }
        verdict
    }

    fn strike(&mut self, address: Address, reason: String) -> bool {
        let banned = self.registry.add_strike(&address, self.config.ban_strikes);
        if banned {
            self.bans.push(BanRecord { address, reason, height: self.chain.height() + 1 });
        }
        banned
    }

    pub fn ban_miner(&mut self, address: &Address, reason: &str) -> Result<(), RegistryError> {
        self.registry.ban_miner(address)?;
        self.bans.push(BanRecord { address: *address, reason: reason.to_string(), height: self.chain.height() + 1 });
        Ok(())
    }

    pub fn accept_transaction(&mut self, tx: Transaction) -> Result<(), TxRejection> {
        let entry = self.registry.get(&tx.from).ok_or(TxRejection::Unregistered)?;
        if entry.banned {
            return Err(TxRejection::Banned);
        }
        if !tx.verify_tag(&entry.auth_key) {
            return Err(TxRejection::BadAuthTag);
        }
        if tx.amount == 0 {
            return Err(TxRejection::ZeroAmount);
        }
        self.pool.push(tx);
        Ok(())
    }

    pub fn answer_balance_query(&self, address: &Address) -> u64 {
        self.chain.balance(address)
    }

    pub fn serve_data(&self, digest: &HashDigest) -> Result<&SimulationResult, DataError> {
        self.store.serve_data(digest)
    }

    /// Close the open round at tick `now`: verify, pick the winner, mint and
    /// apply the block. `cache` supplies the authority's own pipeline runs.
    pub fn close_round(&mut self, now: u64, cache: &mut PipelineCache) -> RoundReport {
        let strategy = self.config.strategy;
        let (params, number, opened_at, deadline) = {
            let r = self.round.as_ref().expect("close_round without an open round");
            (r.params.clone(), r.number, r.opened_at, r.deadline)
        };
        assert!(now >= deadline, "round {number} closed before its deadline");
        let subs: Vec<Submission> =
            self.round.as_ref().map(|r| r.submissions.values().cloned().collect()).unwrap_or_default();

        let replication = self.config.replication;
        let threshold = self.config.chi2_threshold;
        let mut self_result = None;
        let outcome = run_with_fallback(
            strategy,
            |s| match s {
                Strategy::Replication => verify_replication(&subs, &replication),
                Strategy::Decoy => {
                    let decoy = self.decoy().expect("round open").clone();
                    verify_decoy(&subs, &decoy)
                }
                Strategy::Reference => match self.reference_data() {
                    Some(reference) => verify_reference_all(&subs, reference, threshold),
                    None => Err(VerifyError::NoReference),
                },
                Strategy::AuthorityCompute => unreachable!("terminal stage handled by self_compute"),
            },
            || {
                let result = cache.get_or_run(&params);
                let verdict = Verdict {
                    accepted: vec![Address::ROOT],
                    winning_digest: Some(result.digest),
                    rejected: Vec::new(),
                    strategy_used: Strategy::AuthorityCompute,
                };
                self_result = Some(result);
                verdict
            },
        );
        let mut outcome = outcome;

        // Winner: uniform over the accepted set, reproducible from the chain.
        let mut rng = SplitMix64::keyed(params.work_seed, &[domain::WINNER, number]);
        let accepted = &outcome.verdict.accepted;
        let winner = accepted[rng.below(accepted.len() as u64) as usize];
        let by_miner: BTreeMap<Address, &Submission> = subs.iter().map(|s| (s.miner, s)).collect();
        let winning_result = match self_result {
            Some(r) => r,
            None => by_miner[&winner].result.clone(),
        };
        outcome.verdict.winning_digest = Some(winning_result.digest);

        let mut accepted_results = Vec::new();
        for addr in accepted {
            if let Some(s) = by_miner.get(addr) {
                accepted_results.push((*addr, s.result.digest, s.result.total_steps()));
                self.store.insert(s.result.clone());
            }
        }
        if winner == Address::ROOT {
            accepted_results.push((winner, winning_result.digest, winning_result.total_steps()));
        }
        self.store.insert(winning_result.clone());

        let mut fabricators = BTreeSet::new();
        let all_rejections = outcome
            .verdict
            .rejected
            .iter()
            .chain(outcome.failures.iter().flat_map(|(_, e)| e.rejected().iter()));
        for (addr, reason) in all_rejections {
            if reason.proves_fabrication() {
                fabricators.insert(*addr);
            }
        }
        let mut newly_banned = Vec::new();
        for addr in fabricators {
            if self.strike(addr, "failed decoy check".into()) {
                newly_banned.push(addr);
            }
        }

        let energy_cut = params.energy_cut;
        let (block, dropped_transactions) = self.assemble_block(number, deadline, winner, params, winning_result.digest);
        let keys = self.registry.keyring();
        self.chain.apply_block(block.clone(), &keys).expect("assembled block validates");

        if let Some(c) = self.controller.as_mut() {
            c.observe(winning_result.total_steps() as f64);
        }
        let round = self.round.take().expect("round open");
        RoundReport {
            block,
            outcome,
            submissions: round.submissions.len(),
            accepted_results,
            decoy_index: round.decoy.map(|d| d.decoy_index),
            dropped_transactions,
            newly_banned,
            energy_cut,
            round_ticks: now - opened_at,
        }
    }

    fn assemble_block(
        &mut self,
        number: u64,
        timestamp: u64,
        winner: Address,
        sim_params: SimulationParameters,
        sim_data_hash: HashDigest,
    ) -> (Block, Vec<(Transaction, ValidationError)>) {
        let mut block = Block {
            number,
            timestamp,
            prev_hash: self.chain.tip_hash(),
            transactions: self.pool.drain_for_block(),
            winner,
            sim_params,
            sim_data_hash,
        };
        let mut dropped = Vec::new();
        loop {
            match self.chain.validate_block(&block, &self.registry) {
                Ok(()) => return (block, dropped),
                Err(e) => {
                    let index = tx_index(&e).unwrap_or_else(|| panic!("block {number} invalid: {e}"));
                    dropped.push((block.transactions.remove(index), e));
                }
            }
        }
    }
}

fn tx_index(e: &ValidationError) -> Option<usize> {
    match *e {
        ValidationError::UnknownSender { index }
        | ValidationError::BadAuthTag { index }
        | ValidationError::StaleNonce { index, .. }
        | ValidationError::ZeroAmount { index }
        | ValidationError::Overspend { index, .. } => Some(index),
        _ => None,
    }
}
