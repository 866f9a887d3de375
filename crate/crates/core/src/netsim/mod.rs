//! Deterministic discrete-event network simulation: message envelopes,
//! latency and partitions, scenario files, the event loop and metrics.

mod config;
mod message;
mod metrics;
mod network;
mod runner;

pub use config::{
    AuditSettings, DifficultySettings, MinerGroup, ReferenceSettings, RosterEntry, ScenarioConfig,
    ScenarioError, WorkSettings, WorkloadSettings,
};
pub use message::{MessageEnvelope, MessageKind, NodeId, Payload};
pub use metrics::{
    emit_metrics, metrics_csv, AuditStats, ClassStats, MetricsRecord, NetworkStats, Summary,
    TransactionStats, METRICS_HEADER,
};
pub use network::{LatencyModel, Network, Partition};
pub use runner::{miner_key, run_scenario, run_scenario_with, RunOptions, ScenarioOutcome};
