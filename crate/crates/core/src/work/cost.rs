//! Analytic expected work for a parameter set.

use super::SimulationParameters;

/// Mean primaries per event: `1 + (draw mod 3)` is uniform on {1, 2, 3}.
const MEAN_PRIMARIES: f64 = 2.0;
/// Simpson panels per smooth segment of the energy integral.
const PANELS: usize = 400;

/// Expected plane crossings of a particle of energy `energy` that still has
/// `planes` planes ahead of it, including all descendants.
///
/// `f(E, 0) = 0`,
/// `f(E, r) = 1 + p(E) * 2 * g(E/2, r-1) + (1 - p(E)) * f(E, r-1)`,
/// with `p(E) = E / (E + split_scale)` and `g(e, r) = f(e, r)` when
/// `e >= cut`, else 0. Returns 0 when `energy < cut`.
pub fn expected_crossings(energy: f64, planes: u32, cut: f64, split_scale: f64) -> f64 {
    if energy < cut {
        return 0.0;
    }
    let n = planes as usize;
    // table[k][r]: energy / 2^k with r planes left
    let mut table = vec![vec![0.0f64; n + 1]; n + 2];
    for r in 1..=n {
        for k in 0..=n {
            let e = energy / (1u64 << k) as f64;
            if e < cut {
                continue;
            }
            let p = e / (e + split_scale);
            let children = if e / 2.0 >= cut { 2.0 * table[k + 1][r - 1] } else { 0.0 };
            table[k][r] = 1.0 + p * children + (1.0 - p) * table[k][r - 1];
        }
    }
    table[0][n]
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + h * i as f64);
    }
    acc * h / 3.0
}

/// Expected total plane crossings (summed over configs) for `params`.
///
/// Integrates [`expected_crossings`] against the exponential primary
/// energy density, splitting the range at `cut * 2^k` where the integrand
/// is discontinuous.
pub fn estimate_cost(params: &SimulationParameters) -> f64 {
    let beam = params.beam_energy;
    let cut = params.energy_cut;
    let upper = cut + 60.0 * beam;
    let mut edges = vec![cut];
    let mut e = cut * 2.0;
    for _ in 0..params.n_layers {
        if e >= upper {
            break;
        }
        edges.push(e);
        e *= 2.0;
    }
    edges.push(upper);

    let per_config_primary: f64 = params
        .configs
        .iter()
        .map(|c| {
            let integrand = |energy: f64| {
                expected_crossings(energy, params.n_layers, cut, c.split_scale)
                    * (-energy / beam).exp()
                    / beam
            };
            edges
                .windows(2)
                .map(|w| {
                    let span = w[1] - w[0];
                    // stay inside the segment so edge values are not evaluated
                    // on the wrong side of a discontinuity
                    let eps = span * 1e-12;
                    simpson(integrand, w[0] + eps, w[1] - eps, PANELS)
                })
                .sum::<f64>()
        })
        .sum();
    params.n_events as f64 * MEAN_PRIMARIES * per_config_primary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::work::ConfigFlag;

    fn params(cut: f64) -> SimulationParameters {
        SimulationParameters {
            work_seed: 1,
            n_events: 100,
            beam_energy: 10.0,
            energy_cut: cut,
            n_layers: 6,
            configs: vec![ConfigFlag { index: 0, smear_sigma: 0.01, split_scale: 8.0 }],
        }
    }

    #[test]
    fn no_split_particle_crosses_every_plane() {
        assert!((expected_crossings(5.0, 4, 1.0, 1e300) - 4.0).abs() < 1e-12);
        assert_eq!(expected_crossings(0.5, 4, 1.0, 8.0), 0.0);
    }

    #[test]
    fn certain_split_doubles_each_plane() {
        // 8 -> 4,4 -> 2 x4 -> 1 x8 with cut 1: 1 + 2 + 4 + 8
        let f = expected_crossings(8.0, 4, 1.0, 1e-300);
        assert!((f - 15.0).abs() < 1e-9);
    }

    #[test]
    fn huge_cut_gives_negligible_cost() {
        assert!(estimate_cost(&params(10.0 * 50.0)) < 1e-12);
    }

    #[test]
    fn cost_is_monotone_in_cut() {
        let cuts = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
        let costs: Vec<f64> = cuts.iter().map(|&c| estimate_cost(&params(c))).collect();
        assert!(costs.windows(2).all(|w| w[0] >= w[1]), "{costs:?}");
    }

    #[test]
    fn cost_scales_with_events_and_configs() {
        let one = estimate_cost(&params(1.0));
        let mut p = params(1.0);
        p.n_events = 200;
        p.configs.push(ConfigFlag { index: 1, smear_sigma: 0.0, split_scale: 8.0 });
        assert!((estimate_cost(&p) - 4.0 * one).abs() < 1e-9 * one);
    }
}
