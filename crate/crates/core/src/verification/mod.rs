//! Result validation: replication quorum, decoy spot checks, comparison
//! with reference data via a Kalman filter, and the fallback ladder that
//! guarantees every round ends with an accepted result.

mod decoy;
mod fallback;
mod kalman;
mod reference;
mod replication;

use serde::{Deserialize, Serialize};

use crate::chain::{Address, HashDigest};
use crate::work::{SimulationParameters, SimulationResult};

pub use decoy::{verify_decoy, DecoySpec};
pub use fallback::{escalation_chain, fallback_escalate, run_with_fallback, FallbackOutcome};
pub use kalman::{kalman_filter_track, KalmanConfig, KalmanError, KalmanFit};
pub use reference::{
    pooled_innovation_chi2, slope_histogram, verify_reference, verify_reference_all, ReferenceDataset,
    ReferenceScore,
    DEFAULT_BINS, DEFAULT_CHI2_THRESHOLD,
};
pub use replication::{verify_replication, ReplicationConfig};

/// A miner's proposed solution for one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub miner: Address,
    pub block_number: u64,
    pub params_echo: SimulationParameters,
    pub result: SimulationResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Replication,
    Decoy,
    Reference,
    /// Terminal stage: the authority runs the pipeline itself.
    AuthorityCompute,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Replication => "replication",
            Strategy::Decoy => "decoy",
            Strategy::Reference => "reference",
            Strategy::AuthorityCompute => "authority_compute",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "replication" => Ok(Strategy::Replication),
            "decoy" => Ok(Strategy::Decoy),
            "reference" => Ok(Strategy::Reference),
            "authority_compute" => Ok(Strategy::AuthorityCompute),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum RejectReason {
    /// Result differs from the selected cluster.
    Minority { digest: HashDigest },
    /// The secret decoy config does not match the authority's own run.
    DecoyMismatch,
    /// Submitted result holds no tracks.
    EmptySubmission,
    /// Slope histogram too far from reference data.
    Histogram { chi2_per_dof: f64 },
    /// Kalman innovation chi2 outside the band around the reference.
    Kalman { ratio: f64 },
}

impl RejectReason {
    /// True when the rejection proves the submission wrong, as opposed to
    /// merely losing a vote or disagreeing with possibly-anomalous data.
    pub fn proves_fabrication(&self) -> bool {
        matches!(self, RejectReason::DecoyMismatch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: Vec<Address>,
    pub winning_digest: Option<HashDigest>,
    pub rejected: Vec<(Address, RejectReason)>,
    pub strategy_used: Strategy,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("no quorum: largest cluster {largest} < min_quorum {required}")]
    NoQuorum {
        largest: usize,
        required: usize,
        rejected: Vec<(Address, RejectReason)>,
    },
    #[error("every submission failed the decoy check")]
    AllFiltered { rejected: Vec<(Address, RejectReason)> },
    #[error("no submission matched the reference data")]
    NoneMatchReference { rejected: Vec<(Address, RejectReason)> },
    #[error("no reference data available this round")]
    NoReference,
}

impl VerifyError {
    pub fn rejected(&self) -> &[(Address, RejectReason)] {
        match self {
            VerifyError::NoQuorum { rejected, .. }
            | VerifyError::AllFiltered { rejected }
            | VerifyError::NoneMatchReference { rejected } => rejected,
            VerifyError::NoReference => &[],
        }
    }
}

/// Group submissions by full result digest and pick the largest cluster,
/// breaking size ties by the lexicographically smallest digest.
/// Returns the winning digest, its members (sorted) and everyone else.
pub(crate) fn largest_cluster<'a>(
    subs: impl IntoIterator<Item = &'a Submission>,
) -> Option<(HashDigest, Vec<Address>, Vec<(Address, RejectReason)>)> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<HashDigest, Vec<Address>> = BTreeMap::new();
    for s in subs {
        groups.entry(s.result.digest).or_default().push(s.miner);
    }
    // BTreeMap iterates digests ascending, so the first maximum wins ties.
    let (&best, _) = groups.iter().fold(None, |acc: Option<(&HashDigest, usize)>, (d, m)| match acc {
        Some((_, n)) if n >= m.len() => acc,
        _ => Some((d, m.len())),
    })?;
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for (digest, mut members) in groups {
        members.sort();
        if digest == best {
            accepted = members;
        } else {
            rejected.extend(members.into_iter().map(|a| (a, RejectReason::Minority { digest })));
        }
    }
    rejected.sort_by_key(|l| l.0);
    Some((best, accepted, rejected))
}
