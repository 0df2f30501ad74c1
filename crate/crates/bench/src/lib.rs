//! Shared fixtures for the criterion benchmarks.

use pgq_core::ImageGrid;

/// Smooth synthetic test scene with a few sharp edges.
pub fn scene(size: usize) -> ImageGrid {
    let s = size as f64;
    ImageGrid::from_fn(size, size, |c, r| {
        let (x, y) = (c as f64 / s, r as f64 / s);
        let disc = if (x - 0.4).powi(2) + (y - 0.55).powi(2) < 0.06 {
            0.35
        } else {
            0.0
        };
        let bar = if (0.7..0.8).contains(&x) { 0.25 } else { 0.0 };
        (0.15 + 0.3 * x + disc + bar + 0.1 * (9.0 * y).sin()).clamp(0.0, 1.0)
    })
}
