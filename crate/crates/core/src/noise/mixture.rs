//! Truncated-sum evaluation of the exact Poisson-Gaussian mixture likelihood.
//! Too slow for the solvers; used to measure how well the shifted-Poisson
//! approximation tracks the true posterior.

use crate::error::{PgqError, Result};

use super::simulate::ln_factorial;

/// Highest photon count worth summing for the given arguments.
pub fn mixture_truncation(x_k: f64, y_tilde: f64, alpha: f64, sigma: f64) -> usize {
    let rate = alpha * x_k.max(0.0);
    let from_rate = rate + 40.0 * rate.sqrt() + 50.0;
    let obs = alpha * y_tilde.max(0.0);
    let from_obs = obs + 40.0 * alpha * sigma + 50.0;
    from_rate.max(from_obs).ceil() as usize
}

/// Negative log of `sum_r Poisson(r; alpha*x_k) * N(y_tilde; r/alpha, sigma^2)`,
/// summed for `r` in `0..=truncation` with log-sum-exp.
pub fn exact_mixture_nll(
    x_k: f64,
    y_tilde: f64,
    alpha: f64,
    sigma: f64,
    truncation: usize,
) -> Result<f64> {
    if !(x_k > 0.0) || !(alpha > 0.0) || !(sigma > 0.0) {
        return Err(PgqError::Domain(format!(
            "mixture likelihood needs x_k, alpha, sigma > 0 (got {x_k}, {alpha}, {sigma})"
        )));
    }
    let rate = alpha * x_k;
    let log_rate = rate.ln();
    let norm = -(sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
    let inv_2s2 = 0.5 / (sigma * sigma);
    let terms: Vec<f64> = (0..=truncation as u64)
        .map(|r| {
            let d = y_tilde - r as f64 / alpha;
            r as f64 * log_rate - rate - ln_factorial(r) - d * d * inv_2s2 + norm
        })
        .collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(PgqError::Domain("mixture likelihood underflowed".into()));
    }
    let sum: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
    Ok(-(peak + sum.ln()))
}
