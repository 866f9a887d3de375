use serde::{Deserialize, Serialize};

use super::{largest_cluster, Strategy, Submission, Verdict, VerifyError};

/// Replication quorum settings. Rounds close at their deadline, so
/// `target_nresults` only bounds the configuration; `min_quorum` decides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplicationConfig {
    pub min_quorum: usize,
    pub target_nresults: usize,
}

impl ReplicationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_quorum == 0 {
            return Err("min_quorum must be at least 1".into());
        }
        if self.target_nresults < self.min_quorum {
            return Err(format!(
                "target_nresults ({}) must be >= min_quorum ({})",
                self.target_nresults, self.min_quorum
            ));
        }
        Ok(())
    }
}

impl Default for ReplicationConfig {
    fn default() -> Self {
        Self { min_quorum: 2, target_nresults: 3 }
    }
}

/// Accept the most common result if at least `min_quorum` miners agree.
pub fn verify_replication(
    subs: &[Submission],
    cfg: &ReplicationConfig,
) -> Result<Verdict, VerifyError> {
    let Some((digest, accepted, rejected)) = largest_cluster(subs) else {
        return Err(VerifyError::NoQuorum { largest: 0, required: cfg.min_quorum, rejected: vec![] });
    };
    if accepted.len() < cfg.min_quorum {
        return Err(VerifyError::NoQuorum {
            largest: accepted.len(),
            required: cfg.min_quorum,
            rejected,
        });
    }
    Ok(Verdict {
        accepted,
        winning_digest: Some(digest),
        rejected,
        strategy_used: Strategy::Replication,
    })
}
