use serde::{Deserialize, Serialize};

use super::{largest_cluster, RejectReason, Strategy, Submission, Verdict, VerifyError};
use crate::rng::SplitMix64;
use crate::work::{config_digest, run_config, ConfigResult, SimulationParameters};

/// The authority's secret spot check for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoySpec {
    pub decoy_index: u32,
    pub decoy_result: ConfigResult,
}

impl DecoySpec {
    /// Pick a config uniformly with the authority's private `rng` and
    /// compute it. Must run after the round's parameters are fixed.
    pub fn draw(params: &SimulationParameters, rng: &mut SplitMix64) -> Self {
        let decoy_index = rng.below(params.configs.len() as u64) as u32;
        let decoy_result = run_config(params, &params.configs[decoy_index as usize]);
        DecoySpec { decoy_index, decoy_result }
    }

    fn matches(&self, sub: &Submission) -> bool {
        let expected = config_digest(&self.decoy_result);
        sub.result
            .per_config
            .iter()
            .find(|c| c.index == self.decoy_index)
            .is_some_and(|c| config_digest(c) == expected)
    }
}

/// Keep submissions whose decoy config matches the authority's run, then
/// accept the most common full result among them.
pub fn verify_decoy(subs: &[Submission], decoy: &DecoySpec) -> Result<Verdict, VerifyError> {
    let (passed, failed): (Vec<&Submission>, Vec<&Submission>) =
        subs.iter().partition(|s| decoy.matches(s));
    let mut filtered: Vec<_> = failed.iter().map(|s| (s.miner, RejectReason::DecoyMismatch)).collect();
    filtered.sort_by_key(|l| l.0);

    let Some((digest, accepted, minority)) = largest_cluster(passed) else {
        return Err(VerifyError::AllFiltered { rejected: filtered });
    };
    let mut rejected = filtered;
    rejected.extend(minority);
    rejected.sort_by_key(|l| l.0);
    Ok(Verdict { accepted, winning_digest: Some(digest), rejected, strategy_used: Strategy::Decoy })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::*;

    fn decoy_for(result: &crate::work::SimulationResult, index: u32) -> DecoySpec {
        DecoySpec { decoy_index: index, decoy_result: result.per_config[index as usize].clone() }
    }

    #[test]
    fn honest_submissions_all_pass() {
        let honest = result_with([1, 2, 3]);
        let subs: Vec<_> = (1..=4).map(|i| sub(i, &honest)).collect();
        let v = verify_decoy(&subs, &decoy_for(&honest, 1)).unwrap();
        assert_eq!(v.accepted.len(), 4);
        assert!(v.rejected.is_empty());
        assert_eq!(v.strategy_used, Strategy::Decoy);
    }

    #[test]
    fn full_fabricator_is_always_filtered() {
        let honest = result_with([1, 2, 3]);
        let fake = result_with([7, 8, 9]);
        for idx in 0..3 {
            let v = verify_decoy(&[sub(1, &honest), sub(2, &fake), sub(3, &fake)], &decoy_for(&honest, idx))
                .unwrap();
            assert_eq!(v.accepted, vec![addr(1)]);
            assert!(v.rejected.iter().all(|(_, r)| *r == RejectReason::DecoyMismatch));
        }
    }

    #[test]
    fn partial_fabricator_passes_only_on_correct_configs() {
        let honest = result_with([1, 2, 3]);
        let partial = result_with([1, 8, 9]); // correct on config 0 only
        let subs: Vec<_> = (1..=3).map(|i| sub(i, &partial)).chain([sub(9, &honest)]).collect();
        let v = verify_decoy(&subs, &decoy_for(&honest, 0)).unwrap();
        assert_eq!(v.winning_digest, Some(partial.digest));
        let v = verify_decoy(&subs, &decoy_for(&honest, 2)).unwrap();
        assert_eq!(v.winning_digest, Some(honest.digest));
    }

    #[test]
    fn all_filtered_is_an_error() {
        let honest = result_with([1, 2, 3]);
        let fake = result_with([7, 8, 9]);
        let err = verify_decoy(&[sub(1, &fake)], &decoy_for(&honest, 0)).unwrap_err();
        assert!(matches!(err, VerifyError::AllFiltered { ref rejected } if rejected.len() == 1));
        assert!(matches!(verify_decoy(&[], &decoy_for(&honest, 0)), Err(VerifyError::AllFiltered { .. })));
    }

    #[test]
    fn draw_is_uniform_and_matches_pipeline() {
        let p = params();
        let mut rng = SplitMix64::new(5);
        let mut counts = [0u32; 3];
        for _ in 0..3000 {
            counts[rng.below(3) as usize] += 1;
        }
        assert!(counts.iter().all(|&c| (900..1100).contains(&c)));
        let spec = DecoySpec::draw(&p, &mut SplitMix64::new(1));
        let full = crate::work::run_pipeline(&p).unwrap();
        assert_eq!(spec.decoy_result, full.per_config[spec.decoy_index as usize]);
    }
}
