use crate::error::Result;
use crate::grid::ImageGrid;

/// Reported PSNR for a perfect reconstruction.
pub const PSNR_CAP_DB: f64 = 999.0;

pub fn mse(estimate: &ImageGrid, reference: &ImageGrid) -> Result<f64> {
    estimate.ensure_same_dims(reference, "mse")?;
    let sum: f64 = estimate
        .data()
        .iter()
        .zip(reference.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / estimate.len() as f64)
}

/// Peak signal-to-noise ratio in dB over the whole image, capped at 999 dB.
pub fn psnr(estimate: &ImageGrid, reference: &ImageGrid, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(crate::PgqError::Domain(format!(
            "PSNR peak must be positive, got {peak}"
        )));
    }
    let err = mse(estimate, reference)?;
    if err == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (peak * peak / err).log10()).min(PSNR_CAP_DB))
}
