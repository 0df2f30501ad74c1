use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::convolve::{convolve, Boundary};
use crate::error::Result;
use crate::grid::ImageGrid;
use crate::kernel::Kernel;

use super::likelihood::quantize;
use super::NoiseParams;

/// Poisson variate generator: sequential-search inversion below a mean of 30,
/// Hörmann's transformed rejection (PTRS) at or above it.
#[derive(Debug, Clone, Copy, Default)]
pub struct PoissonSampler;

impl PoissonSampler {
    const INVERSION_LIMIT: f64 = 30.0;

    pub fn sample<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> u64 {
        if !(mean > 0.0) {
            return 0;
        }
        if mean < Self::INVERSION_LIMIT {
            Self::inversion(mean, rng)
        } else {
            Self::ptrs(mean, rng)
        }
    }

    fn inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            // cdf can stall just below 1 from rounding; the tail mass there is negligible
            if p < f64::MIN_POSITIVE && k as f64 > mean {
                break;
            }
        }
        k
    }

    fn ptrs<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
        let smu = mean.sqrt();
        let b = 0.931 + 2.53 * smu;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        let log_mean = mean.ln();
        loop {
            let u: f64 = rng.random::<f64>() - 0.5;
            let v: f64 = rng.random();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
            if us >= 0.07 && v <= v_r {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
            let rhs = -mean + k * log_mean - ln_factorial(k as u64);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }
}

/// `ln(n!)`, exact summation below 20 and a Stirling series above.
pub(crate) fn ln_factorial(n: u64) -> f64 {
    if n < 20 {
        return (2..=n).map(|i| (i as f64).ln()).sum();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// Deterministic per-pixel generator keyed by `(seed, pixel index)`.
pub(crate) fn pixel_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Simulates an observation of the clean image `x` blurred by `k`.
///
/// Blur uses [`Boundary::Extended`]. Each pixel draws its shot and read noise
/// from its own counter-based stream, so the result depends only on `seed`.
pub fn corrupt(x: &ImageGrid, k: &Kernel, params: &NoiseParams, seed: u64) -> Result<ImageGrid> {
    params.validate()?;
    let x_k = convolve(x, k, Boundary::Extended)?;
    corrupt_blurred(&x_k, params, seed)
}

/// Noise stage of [`corrupt`], applied to an already blurred image.
pub fn corrupt_blurred(x_k: &ImageGrid, params: &NoiseParams, seed: u64) -> Result<ImageGrid> {
    params.validate()?;
    let sampler = PoissonSampler;
    let data = x_k
        .data()
        .iter()
        .enumerate()
        .map(|(i, &xk)| {
            let mut rng = pixel_rng(seed, i);
            let counts = sampler.sample(params.alpha * xk.max(0.0), &mut rng);
            let mut y = counts as f64 / params.alpha;
            if params.sigma > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                y += params.sigma * z;
            }
            quantize(y.max(0.0), params.q, params.g)
        })
        .collect();
    ImageGrid::new(x_k.width(), x_k.height(), data)
}
