//! Toy Monte Carlo work: event generation, transport through a planar
//! detector, digitization and greedy track reconstruction.
//!
//! The whole pipeline is a pure function of [`SimulationParameters`].
//! Random numbers come from SplitMix64 streams keyed by
//! `(work_seed, stage, config index, event index)`, so configs and events
//! can be evaluated in any order or in parallel with identical output.

mod cache;
mod cost;
mod detector;
mod events;
mod pipeline;

use serde::{Deserialize, Serialize};

use crate::chain::HashDigest;
use crate::codec::Encoder;

pub use cache::PipelineCache;
pub use cost::{estimate_cost, expected_crossings};
pub use detector::{digitize, fit_line, reconstruct_tracks, DetectorGeometry, DigiRecord};
pub use events::{generate_events, transport_and_respond, HitRecord, Primary};
pub use pipeline::{
    canonical_digest, config_digest, run_config, run_pipeline, run_pipeline_sequential,
    ConfigResult, SimulationResult, TrackHit, TrackRecord,
};

/// Fraction of a particle's energy recorded at each plane it crosses.
pub const DEPOSIT_FRACTION: f64 = 0.1;
/// Slope offset applied to the two children of a split.
pub const CHILD_SLOPE_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFlag {
    pub index: u32,
    /// Gaussian resolution of the measured transverse coordinate.
    pub smear_sigma: f64,
    /// `E0` in the split probability `E / (E + E0)`.
    pub split_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationParameters {
    pub work_seed: u64,
    pub n_events: u32,
    pub beam_energy: f64,
    pub energy_cut: f64,
    pub n_layers: u32,
    pub configs: Vec<ConfigFlag>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("beam_energy must be positive and finite, got {0}")]
    BeamEnergy(f64),
    #[error("energy_cut must be positive and finite, got {0}")]
    EnergyCut(f64),
    #[error("n_layers must be at least 2, got {0}")]
    Layers(u32),
    #[error("at least one config is required")]
    NoConfigs,
    #[error("config at position {position} has index {index}")]
    ConfigIndex { position: usize, index: u32 },
    #[error("config {0}: smear_sigma must be non-negative")]
    Smear(u32),
    #[error("config {0}: split_scale must be positive")]
    SplitScale(u32),
}

impl SimulationParameters {
    /// Placeholder parameters carried by the genesis block.
    pub fn genesis() -> Self {
        SimulationParameters {
            work_seed: 0,
            n_events: 0,
            beam_energy: 1.0,
            energy_cut: 1.0,
            n_layers: 2,
            configs: vec![ConfigFlag { index: 0, smear_sigma: 0.0, split_scale: 1.0 }],
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.beam_energy > 0.0 && self.beam_energy.is_finite()) {
            return Err(ParamError::BeamEnergy(self.beam_energy));
        }
        if !(self.energy_cut > 0.0 && self.energy_cut.is_finite()) {
            return Err(ParamError::EnergyCut(self.energy_cut));
        }
        if self.n_layers < 2 {
            return Err(ParamError::Layers(self.n_layers));
        }
        if self.configs.is_empty() {
            return Err(ParamError::NoConfigs);
        }
        for (position, c) in self.configs.iter().enumerate() {
            if c.index as usize != position {
                return Err(ParamError::ConfigIndex { position, index: c.index });
            }
            if !(c.smear_sigma >= 0.0 && c.smear_sigma.is_finite()) {
                return Err(ParamError::Smear(c.index));
            }
            if !(c.split_scale > 0.0) {
                return Err(ParamError::SplitScale(c.index));
            }
        }
        Ok(())
    }

    pub(crate) fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.work_seed)
            .u32(self.n_events)
            .f64(self.beam_energy)
            .f64(self.energy_cut)
            .u32(self.n_layers)
            .len_prefix(self.configs.len());
        for c in &self.configs {
            enc.u32(c.index).f64(c.smear_sigma).f64(c.split_scale);
        }
    }

    /// Digest of the canonical encoding; identifies a work unit.
    pub fn digest(&self) -> HashDigest {
        let mut enc = Encoder::new();
        self.encode(&mut enc);
        HashDigest(enc.sha256())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genesis_params_are_valid() {
        SimulationParameters::genesis().validate().unwrap();
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = SimulationParameters::genesis();
        p.energy_cut = 0.0;
        assert_eq!(p.validate(), Err(ParamError::EnergyCut(0.0)));
        let mut p = SimulationParameters::genesis();
        p.n_layers = 1;
        assert_eq!(p.validate(), Err(ParamError::Layers(1)));
        let mut p = SimulationParameters::genesis();
        p.configs.clear();
        assert_eq!(p.validate(), Err(ParamError::NoConfigs));
        let mut p = SimulationParameters::genesis();
        p.configs[0].index = 3;
        assert!(matches!(p.validate(), Err(ParamError::ConfigIndex { .. })));
        let mut p = SimulationParameters::genesis();
        p.configs[0].smear_sigma = -1.0;
        assert_eq!(p.validate(), Err(ParamError::Smear(0)));
    }
}
