use super::{Strategy, Verdict, VerifyError};

/// Next rung when a strategy accepted nothing:
/// reference → decoy → replication → authority compute.
pub fn fallback_escalate(current: Strategy) -> Strategy {
    match current {
        Strategy::Reference => Strategy::Decoy,
        Strategy::Decoy => Strategy::Replication,
        Strategy::Replication | Strategy::AuthorityCompute => Strategy::AuthorityCompute,
    }
}

/// Every strategy tried, in order, when starting from `start` and nothing
/// is ever accepted.
pub fn escalation_chain(start: Strategy) -> Vec<Strategy> {
    let mut chain = vec![start];
    let mut current = start;
    while current != Strategy::AuthorityCompute {
        current = fallback_escalate(current);
        chain.push(current);
    }
    chain
}

#[derive(Debug, Clone, PartialEq)]
pub struct FallbackOutcome {
    pub verdict: Verdict,
    /// Number of escalations taken; 0 when the first strategy succeeded.
    pub depth: usize,
    pub failures: Vec<(Strategy, VerifyError)>,
}

/// Walk the ladder from `start`. `attempt` runs a miner-facing strategy;
/// `self_compute` produces the terminal verdict and cannot fail.
pub fn run_with_fallback(
    start: Strategy,
    mut attempt: impl FnMut(Strategy) -> Result<Verdict, VerifyError>,
    self_compute: impl FnOnce() -> Verdict,
) -> FallbackOutcome {
    let mut failures = Vec::new();
    let mut current = start;
    loop {
        if current == Strategy::AuthorityCompute {
            return FallbackOutcome { verdict: self_compute(), depth: failures.len(), failures };
        }
        match attempt(current) {
            Ok(verdict) if !verdict.accepted.is_empty() => {
                return FallbackOutcome { verdict, depth: failures.len(), failures };
            }
            Ok(verdict) => failures.push((
                current,
                VerifyError::NoneMatchReference { rejected: verdict.rejected },
            )),
            Err(err) => failures.push((current, err)),
        }
        current = fallback_escalate(current);
    }
}
