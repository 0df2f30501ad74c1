use crate::convolve::SolverBoundary;
use crate::error::{PgqError, Result};

/// Largest multiplier step size, `(sqrt(5) + 1) / 2`.
pub const GAMMA_MAX: f64 = 1.618_033_988_749_895;

/// Outer-loop settings shared by the generic and fused TV solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Penalty scale; the penalty is `beta0 / sigma_avg^2`.
    pub beta0: f64,
    /// Threshold on `||x_new - x_old||^2 / ||x_old||^2`.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Step size at the darkest observed pixel, as a fraction of [`GAMMA_MAX`].
    pub gamma_lo_frac: f64,
    /// Step size at the brightest observed pixel, as a fraction of [`GAMMA_MAX`].
    pub gamma_hi_frac: f64,
    /// Fused TV mode only: iterations run as plain AWGN ADM-TV before the
    /// likelihood and multiplier updates start.
    pub warmup_iters: usize,
    pub boundary: SolverBoundary,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::deconvolution()
    }
}

impl SolverConfig {
    pub fn deconvolution() -> Self {
        Self {
            beta0: 16.0,
            epsilon: 1e-5,
            max_iters: 300,
            gamma_lo_frac: 0.5,
            gamma_hi_frac: 1.0,
            warmup_iters: 6,
            boundary: SolverBoundary::Extended,
        }
    }

    pub fn denoising() -> Self {
        Self {
            beta0: 2.0,
            epsilon: 1e-3,
            ..Self::deconvolution()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            problems.push(format!("beta0 must be positive, got {}", self.beta0));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            problems.push(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iters == 0 {
            problems.push("max_iters must be at least 1".to_string());
        }
        let (lo, hi) = (self.gamma_lo_frac, self.gamma_hi_frac);
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            problems.push(format!(
                "need 0 < gamma_lo_frac <= gamma_hi_frac <= 1, got {lo} and {hi}"
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(PgqError::Config(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_max_is_golden_ratio() {
        assert_eq!(GAMMA_MAX, (5f64.sqrt() + 1.0) / 2.0);
    }

    #[test]
    fn validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig::denoising().validate().is_ok());
        let bad = SolverConfig {
            gamma_lo_frac: 0.8,
            gamma_hi_frac: 0.6,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            beta0: 0.0,
            max_iters: 0,
            ..SolverConfig::default()
        };
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("beta0") && msg.contains("max_iters"));
    }
}
