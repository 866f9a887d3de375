//! Cheap fake results. Each fabricated config is shaped like real output
//! and carries a consistent digest, so only content checks can catch it.

use crate::rng::SplitMix64;
use crate::verification::ReferenceDataset;
use crate::work::{ConfigResult, SimulationParameters, TrackHit, TrackRecord};

/// Half-width of the uniform scatter put on fabricated hits.
pub const FAKE_HIT_SCATTER: f64 = 0.5;

/// A made-up config result drawn from `rng`.
pub fn fabricate_config(params: &SimulationParameters, index: u32, rng: &mut SplitMix64) -> ConfigResult {
    let n_tracks = params.n_events as u64 * (1 + rng.below(3));
    let tracks = (0..n_tracks)
        .map(|_| {
            let a = rng.uniform(-0.05, 0.05);
            let b = rng.uniform(-1.0, 1.0);
            let n_hits = 2 + rng.below(params.n_layers.saturating_sub(1) as u64) as u32;
            let hits = (0..n_hits)
                .map(|layer| TrackHit {
                    layer,
                    u: a + b * (layer + 1) as f64 + rng.uniform(-FAKE_HIT_SCATTER, FAKE_HIT_SCATTER),
                })
                .collect();
            TrackRecord { a, b, adc_sum: rng.below(200), n_hits, hits }
        })
        .collect();
    let step_count = n_tracks * params.n_layers as u64 + rng.below(100);
    ConfigResult { index, tracks, step_count }
}

/// Bootstrap resample of the reference tracks for config `index`: same
/// track count, drawn with replacement.
pub fn resample_reference(reference: &ReferenceDataset, index: u32, rng: &mut SplitMix64) -> ConfigResult {
    let source = reference.truth.per_config.iter().find(|c| c.index == index);
    let Some(source) = source else {
        return ConfigResult { index, tracks: Vec::new(), step_count: 0 };
    };
    let n = source.tracks.len();
    let tracks = (0..n).map(|_| source.tracks[rng.below(n as u64) as usize].clone()).collect();
    ConfigResult { index, tracks, step_count: source.step_count }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::work::ConfigFlag;

    fn params() -> SimulationParameters {
        SimulationParameters {
            work_seed: 1,
            n_events: 10,
            beam_energy: 5.0,
            energy_cut: 1.0,
            n_layers: 5,
            configs: vec![ConfigFlag { index: 0, smear_sigma: 0.01, split_scale: 5.0 }],
        }
    }

    #[test]
    fn fabricated_tracks_are_well_formed() {
        let c = fabricate_config(&params(), 0, &mut SplitMix64::new(3));
        assert!(c.tracks.len() >= 10);
        for t in &c.tracks {
            assert_eq!(t.hits.len() as u32, t.n_hits);
            assert!((2..=5).contains(&t.n_hits));
            assert!((-1.0..1.0).contains(&t.b));
        }
    }

    #[test]
    fn same_stream_same_fabrication() {
        let a = fabricate_config(&params(), 0, &mut SplitMix64::new(3));
        let b = fabricate_config(&params(), 0, &mut SplitMix64::new(3));
        assert_eq!(a, b);
    }

    #[test]
    fn resample_keeps_count_and_draws_from_reference() {
        let reference = ReferenceDataset::generate(&params(), 77, 16, 0.0).unwrap();
        let src = &reference.truth.per_config[0];
        let c = resample_reference(&reference, 0, &mut SplitMix64::new(5));
        assert_eq!(c.tracks.len(), src.tracks.len());
        assert!(c.tracks.iter().all(|t| src.tracks.contains(t)));
    }
}
