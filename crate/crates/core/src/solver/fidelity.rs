use crate::grid::ImageGrid;
use crate::noise::{pgq_loss, quant_moments, NoiseParams, QuantMoments};

use super::updates::tau_from_moments;

/// Per-pixel data term `L(tau; y)` of the split problem, bound to one
/// observation.
pub trait PixelFidelity {
    /// Starting value of the split variable at pixel `i`.
    fn initial_tau(&self, i: usize) -> f64;

    /// Minimizer over `tau` of `beta/2 (tau - x_k)^2 - lambda (tau - x_k) + L(tau)`.
    fn prox(&self, i: usize, x_k: f64, lambda: f64, beta: f64) -> f64;

    /// `L(tau)` at pixel `i`, up to a constant.
    fn loss(&self, i: usize, tau: f64) -> f64;
}

/// Shifted-Poisson likelihood with quantization moments, precomputed per pixel.
#[derive(Debug, Clone)]
pub struct PgqFidelity {
    params: NoiseParams,
    y: Vec<f64>,
    moments: Vec<QuantMoments>,
}

impl PgqFidelity {
    pub fn new(y: &ImageGrid, params: NoiseParams) -> Self {
        let moments = y
            .data()
            .iter()
            .map(|&v| quant_moments(v, params.q, params.g))
            .collect();
        Self {
            params,
            y: y.data().to_vec(),
            moments,
        }
    }

    pub fn moments(&self) -> &[QuantMoments] {
        &self.moments
    }
}

impl PixelFidelity for PgqFidelity {
    fn initial_tau(&self, i: usize) -> f64 {
        self.moments[i].m_q
    }

    #[inline]
    fn prox(&self, i: usize, x_k: f64, lambda: f64, beta: f64) -> f64 {
        tau_from_moments(x_k, lambda, &self.moments[i], &self.params, beta)
    }

    fn loss(&self, i: usize, tau: f64) -> f64 {
        pgq_loss(tau, self.y[i], &self.params).unwrap_or(f64::INFINITY)
    }
}

/// Gaussian data term `(tau - y)^2 / (2 sigma^2)`. With it the splitting loop
/// degenerates to repeated calls of the baseline.
#[derive(Debug, Clone)]
pub struct QuadraticFidelity {
    y: Vec<f64>,
    sigma: f64,
}

impl QuadraticFidelity {
    pub fn new(y: &ImageGrid, sigma: f64) -> Self {
        Self {
            y: y.data().to_vec(),
            sigma,
        }
    }
}

impl PixelFidelity for QuadraticFidelity {
    fn initial_tau(&self, i: usize) -> f64 {
        self.y[i]
    }

    fn prox(&self, i: usize, x_k: f64, lambda: f64, beta: f64) -> f64 {
        let w = 1.0 / (self.sigma * self.sigma);
        (beta * x_k + lambda + w * self.y[i]) / (beta + w)
    }

    fn loss(&self, i: usize, tau: f64) -> f64 {
        let d = tau - self.y[i];
        0.5 * d * d / (self.sigma * self.sigma)
    }
}
