//! The discrete-event scenario loop.
//!
//! Round `r` opens at tick `(r - 1) * interval` and closes at `r * interval`.
//! Events run in `(tick, sequence)` order; a round's close event is queued
//! when the round opens, so it runs before anything else landing on the
//! deadline tick.

use std::collections::{BTreeMap, BTreeSet};

use super::config::{ScenarioConfig, ScenarioError};
use super::message::{MessageEnvelope, NodeId, Payload};
use super::metrics::{AuditStats, ClassStats, MetricsRecord, NetworkStats, Summary, TransactionStats};
use super::network::Network;
use crate::authority::{Authority, RoundReport};
use crate::chain::{replay_chain, Address, AuthKey, ChainState, HashDigest, KeyRing};
use crate::codec::Encoder;
use crate::miner::{BlockOutcome, MinerNode};
use crate::rng::{domain, SplitMix64};
use crate::work::{estimate_cost, PipelineCache, SimulationParameters};

/// Execution options that must not change any output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads for the simulation pipeline; 1 runs it inline.
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { threads: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub chain: ChainState,
    pub keys: KeyRing,
    pub metrics: Vec<MetricsRecord>,
    pub summary: Summary,
}

/// Auth key of roster slot `index`, derived from the scenario seed.
pub fn miner_key(seed: u64, index: u32) -> AuthKey {
    let mut enc = Encoder::new();
    enc.u64(seed).u64(domain::KEYS).u32(index);
    AuthKey(HashDigest(enc.sha256()))
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome, ScenarioError> {
    run_scenario_with(cfg, RunOptions::default())
}

pub fn run_scenario_with(cfg: &ScenarioConfig, opts: RunOptions) -> Result<ScenarioOutcome, ScenarioError> {
    cfg.validate()?;
    if opts.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| ScenarioError::Invariant(format!("thread pool: {e}")))?;
        pool.install(|| Sim::new(cfg, true).run())
    } else {
        Sim::new(cfg, false).run()
    }
}

#[derive(Debug)]
enum Event {
    OpenRound,
    CloseRound,
    WorkDone { miner: u32, number: u64, params: SimulationParameters },
    Deliver(MessageEnvelope),
    Announce,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    authority: Authority,
    miners: Vec<MinerNode>,
    cache: PipelineCache,
    queue: BTreeMap<(u64, u64), Event>,
    seq: u64,
    net: Network,
    workload: SplitMix64,
    /// Per miner: `(nonce, amount)` of transfers not yet in its local chain.
    in_flight: Vec<Vec<(u64, u64)>>,
    metrics: Vec<MetricsRecord>,
    classes: BTreeMap<String, ClassStats>,
    intake_rejections: BTreeMap<String, u64>,
    txs: TransactionStats,
    net_stats: NetworkStats,
    audits: AuditStats,
    rounds_closed: u64,
    end_tick: u64,
    cost_memo: Option<(HashDigest, f64)>,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig, parallel: bool) -> Self {
        let mut authority = Authority::new(cfg.authority_config());
        let roster = cfg.roster();
        for slot in &roster {
            let address = Address::for_miner(slot.index);
            authority
                .registry
                .register_miner(&format!("miner-{}", slot.index), address, miner_key(cfg.seed, slot.index))
                .expect("roster addresses are distinct");
        }
        let keys = authority.keyring();
        let mut classes: BTreeMap<String, ClassStats> = BTreeMap::new();
        let miners: Vec<MinerNode> = roster
            .iter()
            .map(|slot| {
                classes.entry(slot.behavior.class().to_string()).or_default().miners += 1;
                let mut node = MinerNode::new(
                    slot.index,
                    Address::for_miner(slot.index),
                    miner_key(cfg.seed, slot.index),
                    slot.behavior.clone(),
                    slot.speed,
                    cfg.rules(),
                    keys.clone(),
                    Address::ROOT,
                );
                node.offline = slot.offline;
                node
            })
            .collect();
        Sim {
            cfg,
            authority,
            in_flight: vec![Vec::new(); miners.len()],
            miners,
            cache: PipelineCache::new(4, parallel),
            queue: BTreeMap::new(),
            seq: 0,
            net: Network::new(cfg.network.clone(), SplitMix64::keyed(cfg.seed, &[domain::NETWORK])),
            workload: SplitMix64::keyed(cfg.seed, &[domain::WORKLOAD]),
            metrics: Vec::new(),
            classes,
            intake_rejections: BTreeMap::new(),
            txs: TransactionStats::default(),
            net_stats: NetworkStats::default(),
            audits: AuditStats::default(),
            rounds_closed: 0,
            end_tick: 0,
            cost_memo: None,
        }
    }

    fn schedule(&mut self, tick: u64, event: Event) {
        self.queue.insert((tick, self.seq), event);
        self.seq += 1;
    }

    fn send(&mut self, from: NodeId, to: NodeId, payload: Payload, now: u64, broadcast: bool) {
        let kind = payload.kind().name().to_string();
        *self.net_stats.messages_by_kind.entry(kind.clone()).or_default() += 1;
        *self.net_stats.bytes_by_kind.entry(kind).or_default() += payload.wire_size() as u64;
        if let Some(deliver_tick) = self.net.route(from, to, now) {
            let env = MessageEnvelope { from, to, broadcast, payload, send_tick: now, deliver_tick };
            self.schedule(deliver_tick, Event::Deliver(env));
        }
    }

    fn broadcast(&mut self, payload: Payload, now: u64) {
        for i in 0..self.miners.len() as u32 {
            self.send(NodeId::Authority, NodeId::Miner(i), payload.clone(), now, true);
        }
    }

    fn run(mut self) -> Result<ScenarioOutcome, ScenarioError> {
        self.schedule(0, Event::OpenRound);
        while let Some(((tick, _), event)) = self.queue.pop_first() {
            self.end_tick = tick;
            match event {
                Event::OpenRound => self.open_round(tick),
                Event::CloseRound => self.close_round(tick),
                Event::WorkDone { miner, number, params } => self.work_done(miner, number, &params, tick),
                Event::Deliver(env) => self.deliver(env),
                Event::Announce => {
                    let height = self.authority.chain.height();
                    self.broadcast(Payload::TipAnnouncement { height }, tick);
                }
            }
        }
        self.finish()
    }

    fn open_round(&mut self, now: u64) {
        let round = self.authority.open_round(now);
        let (number, params, deadline) = (round.number, round.params.clone(), round.deadline);
        self.schedule(deadline, Event::CloseRound);
        self.broadcast(Payload::ParamsBroadcast { number, params, deadline }, now);
        self.generate_workload(now);
    }

    fn generate_workload(&mut self, now: u64) {
        let n = self.miners.len() as u64;
        if n < 2 {
            return;
        }
        for _ in 0..self.cfg.workload.tx_per_round {
            let from = self.workload.below(n) as usize;
            let to = (from as u64 + 1 + self.workload.below(n - 1)) % n;
            let amount_draw = self.workload.below(self.cfg.workload.max_amount);
            let node = &self.miners[from];
            if node.offline {
                continue;
            }
            let pending: u64 = self.in_flight[from].iter().map(|&(_, a)| a).sum();
            let spendable = node.local_chain.balance(&node.address).saturating_sub(pending);
            if spendable == 0 {
                continue;
            }
            let amount = 1 + amount_draw.min(spendable - 1);
            let tx = self.miners[from].make_transfer(Address::for_miner(to as u32), amount);
            self.in_flight[from].push((tx.nonce, amount));
            self.txs.sent += 1;
            self.send(NodeId::Miner(from as u32), NodeId::Authority, Payload::TransactionBroadcast(tx), now, false);
        }
    }

    fn close_round(&mut self, now: u64) {
        let params = self.authority.round().expect("round open").params.clone();
        let report = self.authority.close_round(now, &mut self.cache);
        let truth = self.cache.get_or_run(&params).digest;
        self.record(&report, truth);
        self.rounds_closed += 1;
        self.broadcast(Payload::BlockBroadcast(report.block.clone()), now);
        if self.rounds_closed < self.cfg.rounds {
            self.open_round(now);
        } else {
            for s in 1..=self.cfg.settle_rounds as u64 {
                self.schedule(now + s * self.cfg.round_interval, Event::Announce);
            }
        }
    }

    fn record(&mut self, report: &RoundReport, truth: HashDigest) {
        let miner_accepted: Vec<&(Address, HashDigest, u64)> =
            report.accepted_results.iter().filter(|(a, _, _)| *a != Address::ROOT).collect();
        let fabrication_accepted = report.accepted_results.iter().any(|(_, d, _)| *d != truth);
        let mean_step_count = if report.accepted_results.is_empty() {
            0.0
        } else {
            report.accepted_results.iter().map(|(_, _, s)| *s as f64).sum::<f64>()
                / report.accepted_results.len() as f64
        };
        for (addr, _, _) in &miner_accepted {
            if let Some(m) = self.miner_by_address(addr) {
                let class = m.behavior.class().to_string();
                self.classes.entry(class).or_default().accepted += 1;
            }
        }
        if let Some(m) = self.miner_by_address(&report.block.winner) {
            let class = m.behavior.class().to_string();
            self.classes.entry(class).or_default().wins += 1;
        }
        self.txs.dropped_at_assembly += report.dropped_transactions.len() as u64;
        self.txs.included += report.block.transactions.len() as u64;
        self.metrics.push(MetricsRecord {
            height: report.block.number,
            strategy: report.strategy_used().name().to_string(),
            escalation_depth: report.outcome.depth,
            submissions: report.submissions,
            accepted: miner_accepted.len(),
            winner: report.block.winner,
            fabrication_accepted,
            mean_step_count,
            energy_cut: report.energy_cut,
            round_ticks: report.round_ticks,
            transactions: report.block.transactions.len(),
            decoy_index: report.decoy_index,
        });
    }

    fn miner_by_address(&self, addr: &Address) -> Option<&MinerNode> {
        self.miners.iter().find(|m| m.address == *addr)
    }

    fn work_done(&mut self, miner: u32, number: u64, params: &SimulationParameters, now: u64) {
        let idx = miner as usize;
        let reference = if self.miners[idx].behavior.needs_reference()
            && self.authority.round().is_some_and(|r| r.number == number)
        {
            self.authority.reference_data().cloned()
        } else {
            None
        };
        let sub = self.miners[idx].compute_solution(params, number, &mut self.cache, reference.as_ref());
        let class = self.miners[idx].behavior.class().to_string();
        self.classes.entry(class).or_default().submitted += 1;
        self.send(NodeId::Miner(miner), NodeId::Authority, Payload::SolutionSubmission(sub), now, false);
    }

    fn deliver(&mut self, env: MessageEnvelope) {
        let now = env.deliver_tick;
        match env.to {
            NodeId::Authority => self.authority_receives(env.from, env.payload, now),
            NodeId::Miner(i) => {
                if !self.miners[i as usize].offline {
                    self.miner_receives(i, env.from, env.payload, now);
                }
            }
        }
    }

    fn authority_receives(&mut self, from: NodeId, payload: Payload, now: u64) {
        match payload {
            Payload::SolutionSubmission(sub) => {
                let class = self.miner_by_address(&sub.miner).map(|m| m.behavior.class().to_string());
                let outcome = self.authority.accept_submission(sub, now);
                let stats = class.map(|c| self.classes.entry(c).or_default());
                match outcome {
                    Ok(()) => {
                        if let Some(s) = stats {
                            s.stored += 1;
                        }
                    }
                    Err(e) => {
                        if let Some(s) = stats {
                            s.intake_rejected += 1;
                        }
                        *self.intake_rejections.entry(format!("{e:?}")).or_default() += 1;
                    }
                }
            }
            Payload::TransactionBroadcast(tx) => {
                if self.authority.accept_transaction(tx).is_err() {
                    self.txs.refused_at_intake += 1;
                }
            }
            Payload::BalanceQuery { address } => {
                let reply = Payload::BalanceReply {
                    address,
                    balance: self.authority.answer_balance_query(&address),
                    as_of_height: self.authority.chain.height(),
                };
                self.send(NodeId::Authority, from, reply, now, false);
            }
            Payload::DataRequest { digest } => {
                let result = self.authority.serve_data(&digest).cloned();
                self.send(NodeId::Authority, from, Payload::DataReply { digest, result }, now, false);
            }
            Payload::SyncRequest { from_height } => {
                let blocks = self.authority.chain.blocks.iter().skip(from_height as usize).cloned().collect();
                self.send(NodeId::Authority, from, Payload::SyncReply { blocks }, now, false);
            }
            // Authority-originated kinds are never addressed to it.
            _ => {}
        }
    }

    fn miner_receives(&mut self, i: u32, from: NodeId, payload: Payload, now: u64) {
        let idx = i as usize;
        let from_addr = match from {
            NodeId::Authority => Address::ROOT,
            NodeId::Miner(j) => Address::for_miner(j),
        };
        match payload {
            Payload::ParamsBroadcast { number, params, deadline } => {
                if self.miners[idx].local_chain.height() + 1 < number {
                    self.request_sync(i, now);
                }
                let cost = self.round_cost(&params);
                if let Some(ready) = self.miners[idx].on_params_with_cost(&params, cost, now, deadline) {
                    self.schedule(ready, Event::WorkDone { miner: i, number, params });
                }
            }
            Payload::BlockBroadcast(block) => self.miner_block(i, block, from_addr, now),
            Payload::SyncReply { blocks } => {
                for block in blocks {
                    self.miner_block(i, block, from_addr, now);
                }
            }
            Payload::TipAnnouncement { height } => {
                if self.miners[idx].local_chain.height() < height {
                    self.request_sync(i, now);
                }
            }
            Payload::BalanceReply { address, balance, as_of_height } => {
                match self.miners[idx].check_balance_reply(&address, balance, as_of_height) {
                    Some(true) => self.audits.balance_ok += 1,
                    Some(false) => self.audits.balance_mismatch += 1,
                    None => self.audits.balance_stale += 1,
                }
            }
            Payload::DataReply { digest, result } => match result {
                Ok(r) if r.digest == digest && r.digest_is_consistent() => self.audits.data_ok += 1,
                Ok(_) => self.audits.data_mismatch += 1,
                Err(crate::authority::DataError::Denied) => self.audits.data_denied += 1,
                Err(crate::authority::DataError::UnknownDigest) => self.audits.data_unknown += 1,
            },
            _ => {}
        }
    }

    fn round_cost(&mut self, params: &SimulationParameters) -> f64 {
        let key = params.digest();
        match self.cost_memo {
            Some((k, cost)) if k == key => cost,
            _ => {
                let cost = estimate_cost(params);
                self.cost_memo = Some((key, cost));
                cost
            }
        }
    }

    fn request_sync(&mut self, i: u32, now: u64) {
        let from_height = self.miners[i as usize].local_chain.height() + 1;
        self.send(NodeId::Miner(i), NodeId::Authority, Payload::SyncRequest { from_height }, now, false);
    }

    fn miner_block(&mut self, i: u32, block: crate::chain::Block, from: Address, now: u64) {
        let idx = i as usize;
        match self.miners[idx].on_block(block, from) {
            BlockOutcome::Applied(_) => {
                let node = &self.miners[idx];
                let committed = node.local_chain.next_nonce(&node.address);
                self.in_flight[idx].retain(|&(nonce, _)| nonce >= committed);
                let address = node.address;
                let digest = node.local_chain.tip().sim_data_hash;
                if self.cfg.audit.balance_queries {
                    self.send(NodeId::Miner(i), NodeId::Authority, Payload::BalanceQuery { address }, now, false);
                }
                if self.cfg.audit.data_requests {
                    self.send(NodeId::Miner(i), NodeId::Authority, Payload::DataRequest { digest }, now, false);
                }
            }
            BlockOutcome::Gap { .. } => self.request_sync(i, now),
            BlockOutcome::Duplicate | BlockOutcome::Rejected(_) => {}
        }
    }

    fn finish(mut self) -> Result<ScenarioOutcome, ScenarioError> {
        let keys = self.authority.keyring();
        let chain = self.authority.chain.clone();
        let replayed = replay_chain(&chain.blocks, chain.rules, &keys)
            .map_err(|e| ScenarioError::Invariant(format!("replay failed: {e}")))?;
        if replayed != chain {
            return Err(ScenarioError::Invariant("replayed state differs from incremental state".into()));
        }
        let expected_supply = self.cfg.rounds * self.cfg.block_reward;
        if chain.total_supply != expected_supply || chain.balance_sum() != chain.total_supply {
            return Err(ScenarioError::Invariant(format!(
                "supply {} (balances {}) != rounds x reward {}",
                chain.total_supply,
                chain.balance_sum(),
                expected_supply
            )));
        }
        if chain.height() != self.cfg.rounds {
            return Err(ScenarioError::Invariant(format!("{} blocks for {} rounds", chain.height(), self.cfg.rounds)));
        }

        let tip = chain.tip_hash();
        let live: Vec<&MinerNode> = self
            .miners
            .iter()
            .filter(|m| !m.offline && !self.cfg.network.isolated(NodeId::Miner(m.index), self.end_tick))
            .collect();
        let converged = live.iter().filter(|m| m.local_chain.tip_hash() == tip).count() as u32;

        for stats in self.classes.values_mut() {
            stats.acceptance_rate =
                if stats.stored > 0 { stats.accepted as f64 / stats.stored as f64 } else { 0.0 };
        }
        let mut blocks_by_strategy = BTreeMap::new();
        for r in &self.metrics {
            *blocks_by_strategy.entry(r.strategy.clone()).or_default() += 1;
        }
        let fabricated = self.metrics.iter().filter(|r| r.fabrication_accepted).count() as u64;
        self.net_stats.sent = self.net.sent;
        self.net_stats.dropped = self.net.dropped;

        let banned: BTreeSet<Address> = self.authority.bans.iter().map(|b| b.address).collect();
        debug_assert!(banned.iter().all(|a| self.authority.registry.is_banned(a)));

        let summary = Summary {
            name: self.cfg.name.clone(),
            seed: self.cfg.seed,
            rounds: self.cfg.rounds,
            blocks: chain.height(),
            block_reward: self.cfg.block_reward,
            total_supply: chain.total_supply,
            replayed_supply: replayed.total_supply,
            tip_hash: tip,
            configured_strategy: self.cfg.strategy.name().to_string(),
            blocks_by_strategy,
            rounds_escalated: self.metrics.iter().filter(|r| r.escalation_depth > 0).count() as u64,
            fabrication_accepted_rounds: fabricated,
            fabrication_accepted_rate: fabricated as f64 / self.cfg.rounds as f64,
            classes: self.classes,
            intake_rejections: self.intake_rejections,
            bans: self.authority.bans.clone(),
            transactions: self.txs,
            network: self.net_stats,
            audits: self.audits,
            live_nodes: live.len() as u32,
            converged_nodes: converged,
            final_energy_cut: self.authority.energy_cut(),
            pipeline_runs: self.cache.runs(),
        };
        Ok(ScenarioOutcome { chain, keys, metrics: self.metrics, summary })
    }
}
