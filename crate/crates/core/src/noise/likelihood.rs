use crate::error::{PgqError, Result};

use super::NoiseParams;

/// Conditional mean and variance of the analog value given its quantized code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantMoments {
    pub m_q: f64,
    pub sigma_q2: f64,
}

/// Negative Poisson log-likelihood, up to a constant: `alpha*x - alpha*y*ln(x)`.
pub fn lp_loss(x_k: f64, y_k: f64, alpha: f64) -> Result<f64> {
    if !(x_k > 0.0) {
        return Err(PgqError::Domain(format!(
            "Poisson loss needs x_k > 0, got {x_k}"
        )));
    }
    if y_k == 0.0 {
        return Ok(alpha * x_k);
    }
    Ok(alpha * x_k - alpha * y_k * x_k.ln())
}

/// Shifted-Poisson approximation of the Poisson-Gaussian likelihood.
pub fn lpg_loss(x_k: f64, y_tilde: f64, alpha: f64, sigma: f64) -> Result<f64> {
    let shift = alpha * sigma * sigma;
    lp_loss(x_k + shift, y_tilde + shift, alpha)
}

/// Full likelihood including quantization, evaluated through the quantization
/// moments of `y`.
pub fn pgq_loss(x_k: f64, y: f64, params: &NoiseParams) -> Result<f64> {
    let m = quant_moments(y, params.q, params.g);
    let sigma = (params.sigma * params.sigma + m.sigma_q2).sqrt();
    lpg_loss(x_k, m.m_q, params.alpha, sigma)
}

/// Moments of `u^g` for `u` uniform on the quantization bin around `y^(1/g)`.
///
/// The lowest bin, where `y^(1/g) < q/2`, is clamped to `[0, y^(1/g) + q/2]`.
pub fn quant_moments(y: f64, q: f64, g: f64) -> QuantMoments {
    if q == 0.0 {
        return QuantMoments {
            m_q: y,
            sigma_q2: 0.0,
        };
    }
    let y = y.max(0.0);
    let u = if g == 1.0 { y } else { y.powf(1.0 / g) };
    let half = 0.5 * q;
    let hi = u + half;
    let lo = u - half;
    if g == 1.0 && lo >= 0.0 {
        return QuantMoments {
            m_q: y,
            sigma_q2: q * q / 12.0,
        };
    }
    let lo = lo.max(0.0);
    let width = hi - lo;
    let m_q = (hi.powf(g + 1.0) - lo.powf(g + 1.0)) / (width * (g + 1.0));
    let second = (hi.powf(2.0 * g + 1.0) - lo.powf(2.0 * g + 1.0)) / (width * (2.0 * g + 1.0));
    QuantMoments {
        m_q,
        sigma_q2: (second - m_q * m_q).max(0.0),
    }
}

/// Gamma-corrected rounding to the nearest multiple of `q`, half away from zero.
pub fn quantize(y_tilde: f64, q: f64, g: f64) -> f64 {
    if q == 0.0 {
        return y_tilde;
    }
    let y = y_tilde.max(0.0);
    let u = if g == 1.0 { y } else { y.powf(1.0 / g) };
    let level = (u / q).round() * q;
    if g == 1.0 {
        level
    } else {
        level.powf(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{argmin_bisect, central_second_diff, golden_section};

    #[test]
    fn poisson_loss_values() {
        assert_eq!(lp_loss(1.0, 1.0, 3.0).unwrap(), 3.0);
        assert_eq!(lp_loss(2.0, 0.0, 5.0).unwrap(), 10.0);
        // 2 - 3 ln 2
        assert!((lp_loss(2.0, 3.0, 1.0).unwrap() - (-0.079_441_541_679_835_93)).abs() < 1e-15);
        assert!(matches!(lp_loss(0.0, 1.0, 1.0), Err(PgqError::Domain(_))));
        assert!(lp_loss(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn shifted_poisson_reduces_and_minimizes() {
        for &(x, y) in &[(0.3, 0.7), (1.2, 0.1)] {
            assert_eq!(
                lpg_loss(x, y, 7.0, 0.0).unwrap(),
                lp_loss(x, y, 7.0).unwrap()
            );
        }
        let f = |x: f64| lpg_loss(x, 0.5, 100.0, 0.1).unwrap();
        let xmin = argmin_bisect(f, 0.01, 2.0, 1e-5);
        assert!((golden_section(f, 0.01, 2.0, 1e-12) - 0.5).abs() < 1e-6);
        assert!((xmin - 0.5).abs() < 1e-8);
        let curv = central_second_diff(f, 0.5, 1e-4);
        let expected = 1.0 / (0.5 / 100.0 + 0.01);
        assert!((curv - expected).abs() / expected < 0.01, "{curv}");
        assert!(lpg_loss(-2.0, 0.5, 100.0, 0.1).is_err());
    }

    #[test]
    fn linear_quantization_moments() {
        let m = quant_moments(0.5, 0.1, 1.0);
        assert_eq!(m.m_q, 0.5);
        assert_eq!(m.sigma_q2, 0.1 * 0.1 / 12.0);
        for y in [0.0, 0.2, 0.9] {
            let m = quant_moments(y, 0.0, 2.2);
            assert_eq!((m.m_q, m.sigma_q2), (y, 0.0));
        }
    }

    #[test]
    fn lowest_bin_is_clamped() {
        // u uniform on [0, q/2], g = 1: mean q/4, variance (q/2)^2 / 12
        let q = 0.1;
        let m = quant_moments(0.0, q, 1.0);
        assert!((m.m_q - q / 4.0).abs() < 1e-15);
        assert!((m.sigma_q2 - q * q / 48.0).abs() < 1e-15);
        let m = quant_moments(0.0, 1.0 / 256.0, 2.2);
        assert!(m.m_q > 0.0 && m.sigma_q2 > 0.0);
    }

    #[test]
    fn gamma_variance_grows_with_intensity() {
        let q = 1.0 / 256.0;
        let mut prev = 0.0;
        for i in 1..=200 {
            let u = 2.0 * q + i as f64 * 0.0049;
            let m = quant_moments(u.powf(2.2), q, 2.2);
            assert!(m.sigma_q2 > prev, "not increasing at u={u}");
            prev = m.sigma_q2;
        }
    }

    #[test]
    fn pgq_reductions_and_minimum() {
        let p = NoiseParams::new(40.0, 0.2, 0.0, 1.0).unwrap();
        assert_eq!(
            pgq_loss(0.4, 0.3, &p).unwrap(),
            lpg_loss(0.4, 0.3, 40.0, 0.2).unwrap()
        );
        let p = NoiseParams::new(40.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(
            pgq_loss(0.4, 0.3, &p).unwrap(),
            lp_loss(0.4, 0.3, 40.0).unwrap()
        );

        let p = NoiseParams::new(256.0, 0.1, 1.0 / 256.0, 2.2).unwrap();
        let target = quant_moments(0.5, p.q, p.g).m_q;
        let xmin = argmin_bisect(|x| pgq_loss(x, 0.5, &p).unwrap(), 0.05, 2.0, 1e-5);
        assert!((xmin - target).abs() < 1e-8);
    }

    #[test]
    fn quantize_rounding() {
        assert!((quantize(0.234, 0.1, 1.0) - 0.2).abs() < 1e-15);
        assert_eq!(quantize(0.25, 0.5, 1.0), 0.5);
        assert_eq!(quantize(0.3, 0.0, 2.2), 0.3);
        let q: f64 = 1.0 / 256.0;
        let y = (37.0 * q).powf(2.2);
        assert_eq!(quantize(y, q, 2.2), y);
        // arbitrary-precision: round(0.5^(1/2.2) * 256) = 187, (187/256)^2.2
        let expected = 0.501_099_086_115_454_6;
        assert!((quantize(0.5, q, 2.2) - expected).abs() < 1e-14);
    }
}
