//! Observation model: shot noise, additive Gaussian read noise and
//! gamma-corrected quantization.

mod likelihood;
mod mixture;
mod simulate;

pub use likelihood::{lp_loss, lpg_loss, pgq_loss, quant_moments, quantize, QuantMoments};
pub use mixture::{exact_mixture_nll, mixture_truncation};
pub use simulate::{corrupt, corrupt_blurred, PoissonSampler};

use crate::error::{PgqError, Result};

/// Parameters of the mixed Poisson-Gaussian-quantization observation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Photons per unit intensity; shot-noise variance is `x / alpha`.
    pub alpha: f64,
    /// Standard deviation of the additive Gaussian noise.
    pub sigma: f64,
    /// Quantization step in the gamma-corrected domain, `0` disables quantization.
    pub q: f64,
    /// Gamma exponent applied before quantization, `1` for linear data.
    pub g: f64,
}

impl NoiseParams {
    pub fn new(alpha: f64, sigma: f64, q: f64, g: f64) -> Result<Self> {
        let p = Self { alpha, sigma, q, g };
        p.validate()?;
        Ok(p)
    }

    /// Poisson-Gaussian model without quantization.
    pub fn poisson_gaussian(alpha: f64, sigma: f64) -> Result<Self> {
        Self::new(alpha, sigma, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha.is_finite()
            && self.alpha > 0.0
            && self.sigma.is_finite()
            && self.sigma >= 0.0
            && self.q.is_finite()
            && self.q >= 0.0
            && self.g.is_finite()
            && self.g >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(PgqError::Config(format!(
                "invalid noise parameters: alpha={} sigma={} q={} g={} \
                 (need alpha > 0, sigma >= 0, q >= 0, g >= 1)",
                self.alpha, self.sigma, self.q, self.g
            )))
        }
    }

    pub fn is_quantized(&self) -> bool {
        self.q > 0.0
    }

    pub fn moments(&self, y: f64) -> QuantMoments {
        quant_moments(y, self.q, self.g)
    }
}
