//! Comparison of submitted results with reference ("real") data.
//!
//! Reference data is produced by a trusted run of the same round
//! parameters under an independent truth seed. A submission is accepted
//! when its slope histogram is statistically compatible with the
//! reference histogram and the Kalman innovation chi-square of its tracks
//! sits in a band around the reference value.

use serde::{Deserialize, Serialize};

use super::kalman::{kalman_filter_track, KalmanConfig};
use super::{RejectReason, Strategy, Submission, Verdict, VerifyError};
use crate::work::{run_pipeline_sequential, DetectorGeometry, ParamError, SimulationParameters, SimulationResult};

pub const DEFAULT_BINS: usize = 16;
pub const DEFAULT_CHI2_THRESHOLD: f64 = 3.0;

/// Slope counts in `bins` equal bins over `[-1, 1]`; out-of-range slopes
/// land in the edge bins.
pub fn slope_histogram(slopes: impl IntoIterator<Item = f64>, bins: usize) -> Vec<u64> {
    let mut hist = vec![0u64; bins];
    for b in slopes {
        let pos = ((b + 1.0) / 2.0 * bins as f64).floor();
        let idx = if pos.is_nan() { 0 } else { pos.clamp(0.0, (bins - 1) as f64) as usize };
        hist[idx] += 1;
    }
    hist
}

/// `sum_b (n_sim - n_ref)^2 / (n_sim + n_ref + 1) / B`
fn histogram_chi2_per_dof(sim: &[u64], reference: &[u64]) -> f64 {
    let total: f64 = sim
        .iter()
        .zip(reference)
        .map(|(&s, &r)| {
            let (s, r) = (s as f64, r as f64);
            (s - r).powi(2) / (s + r + 1.0)
        })
        .sum();
    total / reference.len() as f64
}

/// Pooled innovation chi2 per degree of freedom over all tracks of
/// `result`, using each config's measurement variance.
pub fn pooled_innovation_chi2(result: &SimulationResult, params: &SimulationParameters) -> Option<f64> {
    let geometry = DetectorGeometry::DEFAULT;
    let mut chi2 = 0.0;
    let mut ndof = 0usize;
    for entry in &result.per_config {
        let Some(config) = params.configs.get(entry.index as usize) else { continue };
        let cfg = KalmanConfig::new(geometry.measurement_variance(config));
        for track in &entry.tracks {
            if let Ok(fit) = kalman_filter_track(&track.measurements(), &cfg) {
                chi2 += fit.chi2;
                ndof += fit.ndof;
            }
        }
    }
    (ndof > 0).then(|| chi2 / ndof as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDataset {
    /// The trusted oracle run, including every track's hit sequence.
    pub truth: SimulationResult,
    pub histogram: Vec<u64>,
    pub mean_chi2_per_dof: Option<f64>,
}

impl ReferenceDataset {
    /// Oracle run of `params` with `truth_seed` in place of the work seed.
    /// `slope_shift` displaces the recorded slope distribution, modelling
    /// data that disagrees with the simulated physics.
    pub fn generate(
        params: &SimulationParameters,
        truth_seed: u64,
        bins: usize,
        slope_shift: f64,
    ) -> Result<Self, ParamError> {
        let mut truth_params = params.clone();
        truth_params.work_seed = truth_seed;
        let truth = run_pipeline_sequential(&truth_params)?;
        let histogram = slope_histogram(truth.all_tracks().map(|t| t.b + slope_shift), bins.max(1));
        let mean_chi2_per_dof = pooled_innovation_chi2(&truth, params);
        Ok(ReferenceDataset { truth, histogram, mean_chi2_per_dof })
    }

    pub fn bins(&self) -> usize {
        self.histogram.len()
    }

    pub fn n_tracks(&self) -> usize {
        self.truth.all_tracks().count()
    }

    /// Per-track `(x, u)` measurement sequences.
    pub fn hit_sequences(&self) -> Vec<Vec<(f64, f64)>> {
        self.truth.all_tracks().map(|t| t.measurements()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceScore {
    pub histogram_chi2_per_dof: f64,
    /// Submitted over reference innovation chi2/dof, when both exist.
    pub kalman_ratio: Option<f64>,
}

/// Score one submission against reference data.
pub fn verify_reference(
    sub: &Submission,
    reference: &ReferenceDataset,
    chi2_threshold: f64,
) -> Result<ReferenceScore, RejectReason> {
    if sub.result.all_tracks().next().is_none() {
        return Err(RejectReason::EmptySubmission);
    }
    let hist = slope_histogram(sub.result.all_tracks().map(|t| t.b), reference.bins());
    let histogram_chi2_per_dof = histogram_chi2_per_dof(&hist, &reference.histogram);
    if histogram_chi2_per_dof > chi2_threshold || histogram_chi2_per_dof.is_nan() {
        return Err(RejectReason::Histogram { chi2_per_dof: histogram_chi2_per_dof });
    }

    let submitted = pooled_innovation_chi2(&sub.result, &sub.params_echo);
    let kalman_ratio = match (submitted, reference.mean_chi2_per_dof) {
        (Some(s), Some(r)) if r > 0.0 => Some(s / r),
        (None, Some(_)) => return Err(RejectReason::Kalman { ratio: 0.0 }),
        _ => None,
    };
    if let Some(ratio) = kalman_ratio {
        if !(ratio >= 1.0 / chi2_threshold && ratio <= chi2_threshold) {
            return Err(RejectReason::Kalman { ratio });
        }
    }
    Ok(ReferenceScore { histogram_chi2_per_dof, kalman_ratio })
}

/// Every submission is judged on its own; all that pass are accepted.
/// `winning_digest` is left unset: it is the digest of whichever accepted
/// miner is later drawn as winner.
pub fn verify_reference_all(
    subs: &[Submission],
    reference: &ReferenceDataset,
    chi2_threshold: f64,
) -> Result<Verdict, VerifyError> {
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for sub in subs {
        match verify_reference(sub, reference, chi2_threshold) {
            Ok(_) => accepted.push(sub.miner),
            Err(reason) => rejected.push((sub.miner, reason)),
        }
    }
    accepted.sort();
    rejected.sort_by_key(|l| l.0);
    if accepted.is_empty() {
        return Err(VerifyError::NoneMatchReference { rejected });
    }
    Ok(Verdict { accepted, winning_digest: None, rejected, strategy_used: Strategy::Reference })
}
