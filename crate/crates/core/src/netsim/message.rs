use serde::{Deserialize, Serialize};

use crate::authority::DataError;
use crate::chain::{Address, Block, HashDigest, Transaction};
use crate::verification::Submission;
use crate::work::{SimulationParameters, SimulationResult};

/// A simulated network endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeId {
    Authority,
    Miner(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    ParamsBroadcast,
    SolutionSubmission,
    BlockBroadcast,
    TransactionBroadcast,
    BalanceQuery,
    BalanceReply,
    DataRequest,
    DataReply,
    SyncRequest,
    SyncReply,
    TipAnnouncement,
}

impl MessageKind {
    pub const ALL: [MessageKind; 11] = [
        MessageKind::ParamsBroadcast,
        MessageKind::SolutionSubmission,
        MessageKind::BlockBroadcast,
        MessageKind::TransactionBroadcast,
        MessageKind::BalanceQuery,
        MessageKind::BalanceReply,
        MessageKind::DataRequest,
        MessageKind::DataReply,
        MessageKind::SyncRequest,
        MessageKind::SyncReply,
        MessageKind::TipAnnouncement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MessageKind::ParamsBroadcast => "params_broadcast",
            MessageKind::SolutionSubmission => "solution_submission",
            MessageKind::BlockBroadcast => "block_broadcast",
            MessageKind::TransactionBroadcast => "transaction_broadcast",
            MessageKind::BalanceQuery => "balance_query",
            MessageKind::BalanceReply => "balance_reply",
            MessageKind::DataRequest => "data_request",
            MessageKind::DataReply => "data_reply",
            MessageKind::SyncRequest => "sync_request",
            MessageKind::SyncReply => "sync_reply",
            MessageKind::TipAnnouncement => "tip_announcement",
        }
    }
}

/// Message bodies. Layouts are plain records so a networked build could
/// reuse them as wire formats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Payload {
    ParamsBroadcast { number: u64, params: SimulationParameters, deadline: u64 },
    SolutionSubmission(Submission),
    BlockBroadcast(Block),
    TransactionBroadcast(Transaction),
    BalanceQuery { address: Address },
    BalanceReply { address: Address, balance: u64, as_of_height: u64 },
    DataRequest { digest: HashDigest },
    DataReply { digest: HashDigest, result: Result<SimulationResult, DataError> },
    SyncRequest { from_height: u64 },
    SyncReply { blocks: Vec<Block> },
    TipAnnouncement { height: u64 },
}

impl Payload {
    pub fn kind(&self) -> MessageKind {
        match self {
            Payload::ParamsBroadcast { .. } => MessageKind::ParamsBroadcast,
            Payload::SolutionSubmission(_) => MessageKind::SolutionSubmission,
            Payload::BlockBroadcast(_) => MessageKind::BlockBroadcast,
            Payload::TransactionBroadcast(_) => MessageKind::TransactionBroadcast,
            Payload::BalanceQuery { .. } => MessageKind::BalanceQuery,
            Payload::BalanceReply { .. } => MessageKind::BalanceReply,
            Payload::DataRequest { .. } => MessageKind::DataRequest,
            Payload::DataReply { .. } => MessageKind::DataReply,
            Payload::SyncRequest { .. } => MessageKind::SyncRequest,
            Payload::SyncReply { .. } => MessageKind::SyncReply,
            Payload::TipAnnouncement { .. } => MessageKind::TipAnnouncement,
        }
    }

    /// Approximate encoded size in bytes.
    pub fn wire_size(&self) -> usize {
        const PARAMS_BASE: usize = 36;
        const PER_CONFIG: usize = 20;
        let params = |p: &SimulationParameters| PARAMS_BASE + PER_CONFIG * p.configs.len();
        match self {
            Payload::ParamsBroadcast { params: p, .. } => 16 + params(p),
            Payload::SolutionSubmission(s) => 40 + params(&s.params_echo) + s.result.wire_size(),
            Payload::BlockBroadcast(b) => b.canonical_bytes().len(),
            Payload::TransactionBroadcast(_) => 112,
            Payload::BalanceQuery { .. } => 32,
            Payload::BalanceReply { .. } => 48,
            Payload::DataRequest { .. } => 32,
            Payload::DataReply { result, .. } => 32 + result.as_ref().map_or(1, |r| r.wire_size()),
            Payload::SyncRequest { .. } => 8,
            Payload::SyncReply { blocks } => blocks.iter().map(|b| b.canonical_bytes().len()).sum(),
            Payload::TipAnnouncement { .. } => 8,
        }
    }
}

/// A message in flight. Broadcasts are fanned out into one envelope per
/// recipient with `broadcast` set.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageEnvelope {
    pub from: NodeId,
    pub to: NodeId,
    pub broadcast: bool,
    pub payload: Payload,
    pub send_tick: u64,
    pub deliver_tick: u64,
}

impl MessageEnvelope {
    pub fn kind(&self) -> MessageKind {
        self.payload.kind()
    }
}
