//! Linear Kalman filter for straight tracks `u = a + b * x`.
//!
//! The state `(a, b)` is static between planes (identity transition, with
//! optional process noise `Q * I`). Each plane contributes one scalar
//! measurement with `H = [1, x]`. The innovation chi-square skips the first
//! two measurements, which only pin down the two state components.

use serde::{Deserialize, Serialize};

type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanConfig {
    /// Measurement noise variance `R`, applied at every plane.
    pub measurement_variance: f64,
    /// Process noise variance `Q` added to both state components per step.
    pub process_noise: f64,
    /// Diagonal of the initial covariance `P0`.
    pub initial_variance: f64,
}

impl KalmanConfig {
    pub fn new(measurement_variance: f64) -> Self {
        KalmanConfig { measurement_variance, process_noise: 0.0, initial_variance: 1e6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanFit {
    pub intercept: f64,
    pub slope: f64,
    pub covariance: Mat2,
    /// Sum of `innovation^2 / S` after the two burn-in measurements.
    pub chi2: f64,
    pub ndof: usize,
}

impl KalmanFit {
    pub fn chi2_per_dof(&self) -> Option<f64> {
        (self.ndof > 0).then(|| self.chi2 / self.ndof as f64)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KalmanError {
    #[error("need at least 2 measurements, got {0}")]
    TooFewHits(usize),
    #[error("measurement variance must be positive")]
    NonPositiveVariance,
    #[error("initial covariance must be positive definite")]
    BadInitialCovariance,
}

const BURN_IN: usize = 2;

/// Filter `(x, u)` measurements in the given order.
pub fn kalman_filter_track(
    measurements: &[(f64, f64)],
    cfg: &KalmanConfig,
) -> Result<KalmanFit, KalmanError> {
    if measurements.len() < 2 {
        return Err(KalmanError::TooFewHits(measurements.len()));
    }
    if !(cfg.measurement_variance > 0.0) {
        return Err(KalmanError::NonPositiveVariance);
    }
    if !(cfg.initial_variance > 0.0) {
        return Err(KalmanError::BadInitialCovariance);
    }
    let r = cfg.measurement_variance;
    let mut state = [0.0f64, 0.0];
    let mut p: Mat2 = [[cfg.initial_variance, 0.0], [0.0, cfg.initial_variance]];
    let mut chi2 = 0.0;
    let mut ndof = 0;

    for (i, &(x, u)) in measurements.iter().enumerate() {
        p[0][0] += cfg.process_noise;
        p[1][1] += cfg.process_noise;

        let h = [1.0, x];
        let ph = [p[0][0] + p[0][1] * x, p[1][0] + p[1][1] * x];
        let s = h[0] * ph[0] + h[1] * ph[1] + r;
        let innovation = u - (state[0] + state[1] * x);
        let k = [ph[0] / s, ph[1] / s];

        if i >= BURN_IN {
            chi2 += innovation * innovation / s;
            ndof += 1;
        }

        state[0] += k[0] * innovation;
        state[1] += k[1] * innovation;

        // Joseph form: (I - K H) P (I - K H)^T + K R K^T
        let a = [[1.0 - k[0] * h[0], -k[0] * h[1]], [-k[1] * h[0], 1.0 - k[1] * h[1]]];
        let ap = mul(&a, &p);
        let mut next = mul(&ap, &transpose(&a));
        for (row, ki) in k.iter().enumerate() {
            for (col, kj) in k.iter().enumerate() {
                next[row][col] += ki * r * kj;
            }
        }
        // keep exact symmetry
        let off = 0.5 * (next[0][1] + next[1][0]);
        next[0][1] = off;
        next[1][0] = off;
        p = next;
    }

    Ok(KalmanFit { intercept: state[0], slope: state[1], covariance: p, chi2, ndof })
}

fn mul(l: &Mat2, r: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = l[i][0] * r[0][j] + l[i][1] * r[1][j];
        }
    }
    out
}

fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}
