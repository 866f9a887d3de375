use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detector::{digitize, reconstruct_tracks, DetectorGeometry};
use super::events::{generate_events, transport_and_respond};
use super::{ConfigFlag, ParamError, SimulationParameters};
use crate::chain::HashDigest;
use crate::codec::{quantize_micro, Encoder};

/// A digitized measurement attached to a reconstructed track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackHit {
    pub layer: u32,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub a: f64,
    pub b: f64,
    pub adc_sum: u64,
    pub n_hits: u32,
    pub hits: Vec<TrackHit>,
}

impl TrackRecord {
    /// Hits as `(x, u)` pairs with `x = layer + 1`.
    pub fn measurements(&self) -> Vec<(f64, f64)> {
        self.hits.iter().map(|h| ((h.layer + 1) as f64, h.u)).collect()
    }

    fn sort_key(&self) -> (i64, i64, u64, u32) {
        (quantize_micro(self.b), quantize_micro(self.a), self.adc_sum, self.n_hits)
    }

    fn encode(&self, enc: &mut Encoder) {
        enc.i64(quantize_micro(self.a))
            .i64(quantize_micro(self.b))
            .u64(self.adc_sum)
            .u32(self.n_hits)
            .len_prefix(self.hits.len());
        for h in &self.hits {
            enc.u32(h.layer).i64(quantize_micro(h.u));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub index: u32,
    pub tracks: Vec<TrackRecord>,
    pub step_count: u64,
}

impl ConfigResult {
    fn encode(&self, enc: &mut Encoder) {
        let mut order: Vec<&TrackRecord> = self.tracks.iter().collect();
        order.sort_by_key(|t| t.sort_key());
        enc.u32(self.index).u64(self.step_count).len_prefix(order.len());
        for t in order {
            t.encode(enc);
        }
    }
}

/// Digest of one config's canonical encoding. Used by the decoy check.
pub fn config_digest(entry: &ConfigResult) -> HashDigest {
    let mut enc = Encoder::new();
    entry.encode(&mut enc);
    HashDigest(enc.sha256())
}

/// SHA-256 over the canonical form: configs in index order, tracks in
/// quantized `(b, a, adc_sum, n_hits)` order, every float rounded to the
/// 1e-6 grid before encoding.
pub fn canonical_digest(per_config: &[ConfigResult]) -> HashDigest {
    let mut order: Vec<&ConfigResult> = per_config.iter().collect();
    order.sort_by_key(|c| c.index);
    let mut enc = Encoder::new();
    enc.len_prefix(order.len());
    for c in order {
        c.encode(&mut enc);
    }
    HashDigest(enc.sha256())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub per_config: Vec<ConfigResult>,
    pub digest: HashDigest,
}

impl SimulationResult {
    /// Sorts configs by index and seals the digest.
    pub fn new(mut per_config: Vec<ConfigResult>) -> Self {
        per_config.sort_by_key(|c| c.index);
        let digest = canonical_digest(&per_config);
        SimulationResult { per_config, digest }
    }

    pub fn digest_is_consistent(&self) -> bool {
        canonical_digest(&self.per_config) == self.digest
    }

    pub fn total_steps(&self) -> u64 {
        self.per_config.iter().map(|c| c.step_count).sum()
    }

    pub fn all_tracks(&self) -> impl Iterator<Item = &TrackRecord> {
        self.per_config.iter().flat_map(|c| c.tracks.iter())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Approximate encoded size, used for bandwidth accounting.
    pub fn wire_size(&self) -> usize {
        let tracks: usize = self
            .per_config
            .iter()
            .map(|c| c.tracks.iter().map(|t| 28 + 12 * t.hits.len()).sum::<usize>() + 16)
            .sum();
        32 + tracks
    }
}

/// One config through all four stages.
pub fn run_config(params: &SimulationParameters, config: &ConfigFlag) -> ConfigResult {
    run_config_with(params, config, &DetectorGeometry::DEFAULT)
}

fn run_config_with(
    params: &SimulationParameters,
    config: &ConfigFlag,
    geometry: &DetectorGeometry,
) -> ConfigResult {
    let primaries = generate_events(params, config);
    let (hits, step_count) = transport_and_respond(&primaries, params, config);
    let digis = digitize(&hits, geometry);
    let tracks = reconstruct_tracks(&digis, config, geometry, params.n_layers);
    ConfigResult { index: config.index, tracks, step_count }
}

/// Run every config, in parallel on the current rayon pool.
pub fn run_pipeline(params: &SimulationParameters) -> Result<SimulationResult, ParamError> {
    params.validate()?;
    let per_config = params
        .configs
        .par_iter()
        .map(|c| run_config(params, c))
        .collect();
    Ok(SimulationResult::new(per_config))
}

pub fn run_pipeline_sequential(
    params: &SimulationParameters,
) -> Result<SimulationResult, ParamError> {
    params.validate()?;
    let per_config = params.configs.iter().map(|c| run_config(params, c)).collect();
    Ok(SimulationResult::new(per_config))
}
