//! Energy-cut controller.
//!
//! Raising the cut drops more particles and lowers the work per round, so
//! the cut moves in the same direction as the cost error:
//! `cut <- cut * clamp(observed / target, 0.5, 2.0)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub const MIN_FACTOR: f64 = 0.5;
pub const MAX_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyController {
    pub target_cost: f64,
    pub energy_cut: f64,
    pub window: usize,
    history: VecDeque<f64>,
}

impl DifficultyController {
    pub fn new(target_cost: f64, energy_cut: f64, window: usize) -> Self {
        assert!(energy_cut > 0.0, "energy cut must be positive");
        DifficultyController { target_cost, energy_cut, window: window.max(1), history: VecDeque::new() }
    }

    /// Apply one update from an observed mean cost and return the new cut.
    pub fn adjust_difficulty(&mut self, observed_mean: f64) -> f64 {
        let ratio = if self.target_cost > 0.0 { observed_mean / self.target_cost } else { 1.0 };
        let factor = if ratio.is_finite() { ratio.clamp(MIN_FACTOR, MAX_FACTOR) } else { MAX_FACTOR };
        self.energy_cut *= factor;
        self.energy_cut
    }

    /// Record one round's observed cost. Every `window` rounds the cut is
    /// retargeted from the mean over that window; in between it holds.
    pub fn observe(&mut self, step_count: f64) -> f64 {
        self.history.push_back(step_count);
        if self.history.len() < self.window {
            return self.energy_cut;
        }
        let mean = self.history.iter().sum::<f64>() / self.history.len() as f64;
        self.history.clear();
        self.adjust_difficulty(mean)
    }
}
