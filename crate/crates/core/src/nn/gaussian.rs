//! Diagonal-Gaussian log densities and the tanh change-of-variables term.

use std::f64::consts::PI;

use super::tape::Var;
use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Keeps `log(1 - tanh²(u))` finite when tanh saturates.
pub const SQUASH_EPS: f64 = 1e-6;

/// Sum of per-dimension normal log densities. `log_std` is clamped to
/// `[LOG_STD_MIN, LOG_STD_MAX]` first.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], value: &[f64]) -> Result<f64> {
    if log_std.len() != mean.len() {
        return Err(Error::dims("gaussian log_std", mean.len(), log_std.len()));
    }
    if value.len() != mean.len() {
        return Err(Error::dims("gaussian value", mean.len(), value.len()));
    }
    Ok(mean
        .iter()
        .zip(log_std)
        .zip(value)
        .map(|((&m, &ls), &x)| {
            let ls = ls.clamp(LOG_STD_MIN, LOG_STD_MAX);
            let z = (x - m) * (-ls).exp();
            -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln()
        })
        .sum())
}

/// `Σ_d log(1 − tanh²(u_d) + ε)`; subtract it from the pre-squash log-prob
/// to get the log density of `tanh(u)`.
pub fn tanh_squash_correction(pre_squash: &[f64]) -> f64 {
    pre_squash
        .iter()
        .map(|&u| {
            let t = u.tanh();
            (1.0 - t * t + SQUASH_EPS).ln()
        })
        .sum()
}

/// Row-wise [`gaussian_log_prob`] on the tape; `log_std` must already be
/// clamped. Returns a (rows × 1) column.
pub fn gaussian_log_prob_on<'t>(mean: Var<'t>, log_std: Var<'t>, value: Var<'t>) -> Var<'t> {
    let cols = mean.shape().1 as f64;
    let z = value.sub(mean).mul(log_std.neg().exp());
    z.square()
        .scale(-0.5)
        .sub(log_std)
        .sum_cols()
        .offset(-0.5 * (2.0 * PI).ln() * cols)
}

/// Row-wise [`tanh_squash_correction`] on the tape, as a (rows × 1) column.
pub fn tanh_squash_correction_on(pre_squash: Var<'_>) -> Var<'_> {
    pre_squash
        .tanh()
        .square()
        .neg()
        .offset(1.0 + SQUASH_EPS)
        .log()
        .sum_cols()
}
