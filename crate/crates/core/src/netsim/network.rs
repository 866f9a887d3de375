use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::message::NodeId;
use crate::rng::SplitMix64;

/// During `[start, end)` messages between a member of `nodes` and a
/// non-member are dropped. Nodes are miner indices; the authority is never
/// a member, so isolated miners lose contact with it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Partition {
    pub nodes: Vec<u32>,
    pub start: u64,
    pub end: u64,
}

impl Partition {
    fn contains(&self, node: NodeId) -> bool {
        matches!(node, NodeId::Miner(i) if self.nodes.contains(&i))
    }

    pub fn separates(&self, a: NodeId, b: NodeId, tick: u64) -> bool {
        (self.start..self.end).contains(&tick) && self.contains(a) != self.contains(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatencyModel {
    pub base: u64,
    /// Extra delay drawn uniformly from `0..=jitter`.
    pub jitter: u64,
    pub drop_rate: f64,
    pub partitions: Vec<Partition>,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel { base: 5, jitter: 0, drop_rate: 0.0, partitions: Vec::new() }
    }
}

impl LatencyModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.drop_rate) {
            return Err(format!("drop_rate must be in [0, 1), got {}", self.drop_rate));
        }
        for p in &self.partitions {
            if p.end < p.start {
                return Err(format!("partition ends ({}) before it starts ({})", p.end, p.start));
            }
        }
        Ok(())
    }

    /// Delivery tick for a message sent at `send_tick`, or `None` if it is
    /// dropped. Draws exactly one drop variate and one jitter variate
    /// (when jitter > 0) per unpartitioned message.
    pub fn deliver(&self, from: NodeId, to: NodeId, send_tick: u64, rng: &mut SplitMix64) -> Option<u64> {
        if self.partitions.iter().any(|p| p.separates(from, to, send_tick)) {
            return None;
        }
        let dropped = rng.chance(self.drop_rate);
        let jitter = if self.jitter > 0 { rng.below(self.jitter + 1) } else { 0 };
        (!dropped).then_some(send_tick + self.base + jitter)
    }

    /// True if `node` is cut off from the authority at `tick`.
    pub fn isolated(&self, node: NodeId, tick: u64) -> bool {
        self.partitions.iter().any(|p| p.separates(node, NodeId::Authority, tick))
    }
}

/// Latency model plus per-pair FIFO bookkeeping.
#[derive(Debug, Clone)]
pub struct Network {
    pub model: LatencyModel,
    rng: SplitMix64,
    last_delivery: BTreeMap<(NodeId, NodeId), u64>,
    pub sent: u64,
    pub dropped: u64,
}

impl Network {
    pub fn new(model: LatencyModel, rng: SplitMix64) -> Self {
        Network { model, rng, last_delivery: BTreeMap::new(), sent: 0, dropped: 0 }
    }

    /// Schedule a send. A message never overtakes an earlier one on the
    /// same ordered pair; ties keep send order via the event sequence.
    pub fn route(&mut self, from: NodeId, to: NodeId, send_tick: u64) -> Option<u64> {
        self.sent += 1;
        let Some(tick) = self.model.deliver(from, to, send_tick, &mut self.rng) else {
            self.dropped += 1;
            return None;
        };
        let last = self.last_delivery.entry((from, to)).or_insert(0);
        let tick = tick.max(*last);
        *last = tick;
        Some(tick)
    }
}
