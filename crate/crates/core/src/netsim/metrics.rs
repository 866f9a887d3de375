//! Per-round metrics table and run summary.
//!
//! `metrics.csv` columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `height` | block number |
//! | `strategy` | strategy that produced the accepted result |
//! | `escalation_depth` | fallback steps taken (0 = configured strategy succeeded) |
//! | `submissions` | submissions that passed intake |
//! | `accepted` | miners in the accepted set (0 when the authority computed) |
//! | `winner` | winner address, hex |
//! | `fabrication_accepted` | 1 if any accepted result differs from the true pipeline output |
//! | `mean_step_count` | mean total step count over accepted results |
//! | `energy_cut` | cut used for this block's parameters |
//! | `round_ticks` | ticks from round open to block |
//! | `transactions` | transactions included in the block |
//! | `decoy_index` | decoy config checked this round, empty if none |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::authority::BanRecord;
use crate::chain::{write_chain, Address, ChainState, HashDigest, KeyRing};

pub const METRICS_HEADER: &str = "height,strategy,escalation_depth,submissions,accepted,winner,\
fabrication_accepted,mean_step_count,energy_cut,round_ticks,transactions,decoy_index";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub height: u64,
    pub strategy: String,
    pub escalation_depth: usize,
    pub submissions: usize,
    pub accepted: usize,
    pub winner: Address,
    pub fabrication_accepted: bool,
    pub mean_step_count: f64,
    pub energy_cut: f64,
    pub round_ticks: u64,
    pub transactions: usize,
    pub decoy_index: Option<u32>,
}

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.height,
            self.strategy,
            self.escalation_depth,
            self.submissions,
            self.accepted,
            self.winner,
            self.fabrication_accepted as u8,
            self.mean_step_count,
            self.energy_cut,
            self.round_ticks,
            self.transactions,
            self.decoy_index.map(|d| d.to_string()).unwrap_or_default(),
        )
    }
}

pub fn metrics_csv(rows: &[MetricsRecord]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(out, "{}", r.csv_row()).expect("write to string");
    }
    out
}

/// Totals for one adversary class.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub miners: u32,
    pub submitted: u64,
    pub stored: u64,
    pub intake_rejected: u64,
    pub accepted: u64,
    pub wins: u64,
    /// accepted / stored.
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransactionStats {
    pub sent: u64,
    pub refused_at_intake: u64,
    pub dropped_at_assembly: u64,
    pub included: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub sent: u64,
    pub dropped: u64,
    pub messages_by_kind: BTreeMap<String, u64>,
    pub bytes_by_kind: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditStats {
    pub balance_ok: u64,
    pub balance_mismatch: u64,
    /// Replies that arrived when the node's chain was at another height.
    pub balance_stale: u64,
    pub data_ok: u64,
    pub data_mismatch: u64,
    pub data_denied: u64,
    pub data_unknown: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub seed: u64,
    pub rounds: u64,
    pub blocks: u64,
    pub block_reward: u64,
    pub total_supply: u64,
    /// Supply recomputed by replaying the chain from genesis.
    pub replayed_supply: u64,
    pub tip_hash: HashDigest,
    pub configured_strategy: String,
    /// Blocks per strategy that produced the accepted result.
    pub blocks_by_strategy: BTreeMap<String, u64>,
    pub rounds_escalated: u64,
    pub fabrication_accepted_rounds: u64,
    pub fabrication_accepted_rate: f64,
    pub classes: BTreeMap<String, ClassStats>,
    pub intake_rejections: BTreeMap<String, u64>,
    pub bans: Vec<BanRecord>,
    pub transactions: TransactionStats,
    pub network: NetworkStats,
    pub audits: AuditStats,
    pub live_nodes: u32,
    pub converged_nodes: u32,
    pub final_energy_cut: f64,
    pub pipeline_runs: u64,
}

impl Summary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }
}

/// Write `metrics.csv`, `summary.json` and `chain.jsonl` into `dir`.
pub fn emit_metrics(
    dir: &Path,
    rows: &[MetricsRecord],
    summary: &Summary,
    chain: &ChainState,
    keys: &KeyRing,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("metrics.csv"), metrics_csv(rows))?;
    std::fs::write(dir.join("summary.json"), summary.to_json())?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(dir.join("chain.jsonl"))?);
    write_chain(&mut file, chain.rules, keys, &chain.blocks).map_err(|e| match e {
        crate::chain::ExportError::Io(io) => io,
        other => std::io::Error::other(other.to_string()),
    })?;
    file.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(h: u64) -> MetricsRecord {
        MetricsRecord {
            height: h,
            strategy: "decoy".into(),
            escalation_depth: 0,
            submissions: 3,
            accepted: 2,
            winner: Address([0xab; 32]),
            fabrication_accepted: false,
            mean_step_count: 123.5,
            energy_cut: 0.25,
            round_ticks: 1000,
            transactions: 0,
            decoy_index: Some(4),
        }
    }

    #[test]
    fn csv_has_header_and_one_row_per_block() {
        let rows: Vec<_> = (1..=20).map(row).collect();
        let text = metrics_csv(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 21);
        assert_eq!(lines[0], METRICS_HEADER);
        let cols = METRICS_HEADER.split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == cols));
        assert!(lines[1].starts_with("1,decoy,0,3,2,abab"));
        assert!(lines[1].ends_with(",0,123.5,0.25,1000,0,4"));
    }
}
