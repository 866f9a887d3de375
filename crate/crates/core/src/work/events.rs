use serde::{Deserialize, Serialize};

use super::{ConfigFlag, SimulationParameters, CHILD_SLOPE_DELTA, DEPOSIT_FRACTION};
use crate::rng::{domain, SplitMix64};

/// A generated primary particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primary {
    pub event: u32,
    pub energy: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    /// 0-based plane index; the plane sits at `x = layer + 1`.
    pub layer: u32,
    pub u: f64,
    pub e_dep: f64,
}

/// Primaries for every event of one config.
///
/// Each event draws `1 + (draw mod 3)` primaries with energy
/// `beam_energy * -ln(u)` and slope uniform in `[-1, 1)`.
pub fn generate_events(params: &SimulationParameters, config: &ConfigFlag) -> Vec<Primary> {
    let mut out = Vec::new();
    for event in 0..params.n_events {
        let mut rng = SplitMix64::keyed(
            params.work_seed,
            &[domain::EVENTS, config.index as u64, event as u64],
        );
        let count = 1 + rng.next_u64() % 3;
        for _ in 0..count {
            let energy = params.beam_energy * -rng.next_open01().ln();
            let slope = rng.uniform(-1.0, 1.0);
            out.push(Primary { event, energy, slope });
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Particle {
    energy: f64,
    slope: f64,
    intercept: f64,
    /// First plane (1-based) this particle has yet to cross.
    next_plane: u32,
}

/// Propagate primaries through planes `x = 1..=n_layers`.
///
/// At each plane a particle deposits `0.1 * E`, records its smeared
/// position and then splits with probability `E / (E + split_scale)` into
/// two children of energy `E / 2` and slopes `t ± 0.05`. Children continue
/// from the split point. Particles below `energy_cut` are dropped before
/// crossing anything. Returns the hits and the number of plane crossings.
pub fn transport_and_respond(
    primaries: &[Primary],
    params: &SimulationParameters,
    config: &ConfigFlag,
) -> (Vec<HitRecord>, u64) {
    let mut hits = Vec::new();
    let mut steps = 0u64;
    let mut stack: Vec<Particle> = Vec::new();

    let mut start = 0;
    while start < primaries.len() {
        let event = primaries[start].event;
        let end = start
            + primaries[start..]
                .iter()
                .take_while(|p| p.event == event)
                .count();
        let mut rng = SplitMix64::keyed(
            params.work_seed,
            &[domain::TRANSPORT, config.index as u64, event as u64],
        );
        // reversed so the first primary is transported first
        stack.extend(primaries[start..end].iter().rev().map(|p| Particle {
            energy: p.energy,
            slope: p.slope,
            intercept: 0.0,
            next_plane: 1,
        }));
        while let Some(p) = stack.pop() {
            if p.energy < params.energy_cut {
                continue;
            }
            for plane in p.next_plane..=params.n_layers {
                steps += 1;
                let x = plane as f64;
                let noise = if config.smear_sigma > 0.0 {
                    config.smear_sigma * rng.next_gaussian()
                } else {
                    0.0
                };
                hits.push(HitRecord {
                    layer: plane - 1,
                    u: p.intercept + p.slope * x + noise,
                    e_dep: DEPOSIT_FRACTION * p.energy,
                });
                let split_p = p.energy / (p.energy + config.split_scale);
                if rng.chance(split_p) {
                    let at = p.intercept + p.slope * x;
                    for delta in [-CHILD_SLOPE_DELTA, CHILD_SLOPE_DELTA] {
                        let slope = p.slope + delta;
                        stack.push(Particle {
                            energy: p.energy / 2.0,
                            slope,
                            intercept: at - slope * x,
                            next_plane: plane + 1,
                        });
                    }
                    break;
                }
            }
        }
        start = end;
    }
    (hits, steps)
}
