use serde::{Deserialize, Serialize};

use super::events::HitRecord;
use super::pipeline::{TrackHit, TrackRecord};
use super::ConfigFlag;

/// Readout geometry shared by every config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorGeometry {
    pub pitch: f64,
    pub adc_gain: f64,
}

impl DetectorGeometry {
    pub const DEFAULT: DetectorGeometry = DetectorGeometry { pitch: 0.01, adc_gain: 0.05 };

    /// Variance of a single digitized measurement under `config`:
    /// Gaussian smear plus uniform quantization over one pitch.
    pub fn measurement_variance(&self, config: &ConfigFlag) -> f64 {
        config.smear_sigma * config.smear_sigma + self.pitch * self.pitch / 12.0
    }
}

impl Default for DetectorGeometry {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DigiRecord {
    pub layer: u32,
    pub u_q: f64,
    pub adc: u64,
}

pub fn digitize(hits: &[HitRecord], geometry: &DetectorGeometry) -> Vec<DigiRecord> {
    hits.iter()
        .map(|h| DigiRecord {
            layer: h.layer,
            u_q: (h.u / geometry.pitch).round() * geometry.pitch,
            adc: (h.e_dep / geometry.adc_gain).floor() as u64,
        })
        .collect()
}

/// Ordinary least squares fit of `u = a + b * x`. Returns `(a, b)`.
///
/// Needs at least two distinct `x` values.
pub fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_u = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxu: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_u)).sum();
    let b = sxu / sxx;
    Some((mean_u - b * mean_x, b))
}

/// Greedy track finding.
///
/// Seeds are the first-plane digis in ascending `u_q`. Each seed is extended
/// plane by plane to the nearest unclaimed digi within
/// `3 * (smear_sigma + pitch)` of the prediction. With a single hit the
/// prediction is the line through the origin (all primaries start there);
/// afterwards it is the least-squares line through the claimed hits.
/// Candidates with fewer than two hits are dropped. Output is sorted by
/// `(b, a)`.
pub fn reconstruct_tracks(
    digis: &[DigiRecord],
    config: &ConfigFlag,
    geometry: &DetectorGeometry,
    n_layers: u32,
) -> Vec<TrackRecord> {
    let mut by_layer: Vec<Vec<usize>> = vec![Vec::new(); n_layers as usize];
    for (i, d) in digis.iter().enumerate() {
        if let Some(layer) = by_layer.get_mut(d.layer as usize) {
            layer.push(i);
        }
    }
    for layer in &mut by_layer {
        layer.sort_by(|&i, &j| digis[i].u_q.total_cmp(&digis[j].u_q).then(i.cmp(&j)));
    }

    let window = 3.0 * (config.smear_sigma + geometry.pitch);
    let mut claimed = vec![false; digis.len()];
    let mut tracks = Vec::new();

    let seeds = by_layer.first().cloned().unwrap_or_default();
    for seed in seeds {
        claimed[seed] = true;
        let mut members = vec![seed];
        let mut points = vec![(1.0, digis[seed].u_q)];
        for (layer, candidates) in by_layer.iter().enumerate().skip(1) {
            let x = (layer + 1) as f64;
            let predicted = match fit_line(&points) {
                Some((a, b)) => a + b * x,
                None => points[0].1 * x / points[0].0,
            };
            let nearest = candidates
                .iter()
                .copied()
                .filter(|&i| !claimed[i])
                .map(|i| (i, (digis[i].u_q - predicted).abs()))
                .filter(|&(_, dist)| dist <= window)
                .min_by(|l, r| l.1.total_cmp(&r.1));
            if let Some((i, _)) = nearest {
                claimed[i] = true;
                members.push(i);
                points.push((x, digis[i].u_q));
            }
        }
        if let Some((a, b)) = fit_line(&points) {
            tracks.push(TrackRecord {
                a,
                b,
                adc_sum: members.iter().map(|&i| digis[i].adc).sum(),
                n_hits: members.len() as u32,
                hits: members
                    .iter()
                    .map(|&i| TrackHit { layer: digis[i].layer, u: digis[i].u_q })
                    .collect(),
            });
        }
    }
    tracks.sort_by(|l, r| l.b.total_cmp(&r.b).then(l.a.total_cmp(&r.a)));
    tracks
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: ConfigFlag = ConfigFlag { index: 0, smear_sigma: 0.0, split_scale: 8.0 };

    fn line_digis(a: f64, b: f64, layers: u32) -> Vec<DigiRecord> {
        (0..layers)
            .map(|l| DigiRecord { layer: l, u_q: a + b * (l + 1) as f64, adc: 2 })
            .collect()
    }

    #[test]
    fn digitize_rounds_to_pitch_and_floors_adc() {
        let g = DetectorGeometry::DEFAULT;
        let hits = [
            HitRecord { layer: 0, u: 0.0, e_dep: 0.01 },
            HitRecord { layer: 1, u: 1.2345, e_dep: 0.26 },
        ];
        let d = digitize(&hits, &g);
        assert_eq!(d[0].u_q, 0.0);
        assert_eq!(d[0].adc, 0);
        assert!((d[1].u_q - 1.23).abs() < 1e-12);
        assert_eq!(d[1].adc, 5);
    }

    #[test]
    fn u_q_is_multiple_of_pitch() {
        let g = DetectorGeometry::DEFAULT;
        for k in -300..300 {
            let u = k as f64 * 0.00731;
            let d = digitize(&[HitRecord { layer: 0, u, e_dep: 1.0 }], &g)[0];
            let cells = d.u_q / g.pitch;
            assert!((cells - cells.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_input_no_tracks() {
        assert!(reconstruct_tracks(&[], &CFG, &DetectorGeometry::DEFAULT, 5).is_empty());
    }

    #[test]
    fn single_noiseless_track() {
        let digis = line_digis(0.0, 0.3, 6);
        let tracks = reconstruct_tracks(&digis, &CFG, &DetectorGeometry::DEFAULT, 6);
        assert_eq!(tracks.len(), 1);
        assert!((tracks[0].b - 0.3).abs() < 1e-9);
        assert!(tracks[0].a.abs() < 1e-9);
        assert_eq!(tracks[0].n_hits, 6);
        assert_eq!(tracks[0].adc_sum, 12);
    }

    #[test]
    fn single_hit_candidates_are_dropped() {
        let digis = [DigiRecord { layer: 0, u_q: 0.5, adc: 1 }];
        assert!(reconstruct_tracks(&digis, &CFG, &DetectorGeometry::DEFAULT, 4).is_empty());
    }

    #[test]
    fn fit_line_needs_two_distinct_x() {
        assert_eq!(fit_line(&[(1.0, 2.0)]), None);
        assert_eq!(fit_line(&[(1.0, 2.0), (1.0, 3.0)]), None);
        let (a, b) = fit_line(&[(1.0, 1.0), (2.0, 3.0)]).unwrap();
        assert!((a + 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }
}
