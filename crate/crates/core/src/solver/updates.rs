use crate::error::{PgqError, Result};
use crate::grid::ImageGrid;
use crate::noise::{quant_moments, NoiseParams, QuantMoments};

use super::config::{SolverConfig, GAMMA_MAX};

/// Smallest admissible value of `tau + alpha * sigma_total^2`.
pub(crate) const TAU_SHIFT_FLOOR: f64 = 1e-9;

/// Closed-form minimizer over `tau` of
/// `beta/2 (tau - x_k)^2 - lambda (tau - x_k) + L(tau; y)`.
pub fn tau_update(x_k: f64, lambda: f64, y: f64, params: &NoiseParams, beta: f64) -> f64 {
    let m = quant_moments(y, params.q, params.g);
    tau_from_moments(x_k, lambda, &m, params, beta)
}

#[inline]
pub(crate) fn tau_from_moments(
    x_k: f64,
    lambda: f64,
    m: &QuantMoments,
    params: &NoiseParams,
    beta: f64,
) -> f64 {
    let alpha = params.alpha;
    let shift = alpha * (params.sigma * params.sigma + m.sigma_q2);
    let inv_beta = 1.0 / beta;
    let v = x_k + inv_beta * lambda;
    let b = v - alpha * inv_beta - shift;
    let c = shift * v + alpha * inv_beta * m.m_q;
    let disc = (b * b + 4.0 * c).max(0.0);
    let tau = 0.5 * (b + disc.sqrt());
    tau.max(TAU_SHIFT_FLOOR - shift)
}

/// `lambda - gamma * beta * (tau - x_k)`.
#[inline]
pub fn lambda_update(lambda: f64, gamma: f64, beta: f64, tau: f64, x_k: f64) -> f64 {
    lambda - gamma * beta * (tau - x_k)
}

/// Per-pixel multiplier step sizes, linear in the observed intensity between
/// `gamma_lo_frac * GAMMA_MAX` (darkest) and `gamma_hi_frac * GAMMA_MAX` (brightest).
pub fn step_size_map(y: &ImageGrid, cfg: &SolverConfig) -> ImageGrid {
    let (lo, hi) = (cfg.gamma_lo_frac, cfg.gamma_hi_frac);
    let y_min = y.min();
    let y_max = y.max();
    let range = y_max - y_min;
    if !(range > 0.0) {
        return y.map(|_| GAMMA_MAX * hi);
    }
    y.map(|v| GAMMA_MAX * (lo + (hi - lo) * (v - y_min) / range))
}

/// Penalty weight `beta0 / sigma_avg^2`, where `sigma_avg^2` is the expected
/// noise variance averaged over the image.
pub fn beta_from_noise(y: &ImageGrid, params: &NoiseParams, beta0: f64) -> Result<f64> {
    if !(beta0 > 0.0) {
        return Err(PgqError::Config(format!(
            "beta0 must be positive, got {beta0}"
        )));
    }
    let n = y.len() as f64;
    let (sum_m, sum_v) = y.data().iter().fold((0.0, 0.0), |(sm, sv), &v| {
        let m = quant_moments(v, params.q, params.g);
        (sm + m.m_q, sv + m.sigma_q2)
    });
    let var_avg = (sum_m / n) / params.alpha + params.sigma * params.sigma + sum_v / n;
    if !(var_avg > 0.0) || !var_avg.is_finite() {
        return Err(PgqError::Config(format!(
            "average noise variance is {var_avg}; the penalty weight is undefined"
        )));
    }
    Ok(beta0 / var_avg)
}

/// `||x_new - x_old||^2 / ||x_old||^2`, or `None` when `x_old` is zero.
pub fn relative_change(x_new: &ImageGrid, x_old: &ImageGrid) -> Option<f64> {
    let (diff, norm) = x_new
        .data()
        .iter()
        .zip(x_old.data())
        .fold((0.0, 0.0), |(d, n), (&a, &b)| {
            (d + (a - b) * (a - b), n + b * b)
        });
    if norm == 0.0 {
        None
    } else {
        Some(diff / norm)
    }
}

pub fn stopping_check(x_new: &ImageGrid, x_old: &ImageGrid, epsilon: f64) -> bool {
    match relative_change(x_new, x_old) {
        Some(r) => r <= epsilon,
        None => x_new.data().iter().all(|&v| v == 0.0),
    }
}
