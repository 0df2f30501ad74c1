use crate::error::{PgqError, Result};
use crate::grid::ImageGrid;

/// Subpixel samples per axis used to rasterize a pill-box disc.
pub const PILLBOX_SUBSAMPLES: usize = 16;

/// A normalized blur kernel with odd dimensions and its origin at the center tap.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    taps: Vec<f64>,
}

impl Kernel {
    /// Builds a kernel from raw taps, normalizing them to unit sum.
    pub fn new(width: usize, height: usize, taps: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(PgqError::Dimension(format!(
                "kernel dimensions must be odd and positive, got {width}x{height}"
            )));
        }
        if taps.len() != width * height {
            return Err(PgqError::Dimension(format!(
                "kernel buffer of length {} does not match {width}x{height}",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(PgqError::Domain("kernel taps must be finite".into()));
        }
        let total: f64 = taps.iter().sum();
        if total.abs() < 1e-300 {
            return Err(PgqError::Domain("kernel taps sum to zero".into()));
        }
        let taps = taps.into_iter().map(|t| t / total).collect();
        Ok(Self {
            width,
            height,
            taps,
        })
    }

    /// The 1x1 identity kernel.
    pub fn identity() -> Self {
        Self {
            width: 1,
            height: 1,
            taps: vec![1.0],
        }
    }

    /// Loads a kernel from an image, e.g. one read from a PFM file.
    pub fn from_grid(grid: &ImageGrid) -> Result<Self> {
        Self::new(grid.width(), grid.height(), grid.data().to_vec())
    }

    /// Uniform disc ("pill-box") kernel of the given radius in pixels.
    ///
    /// Each tap is the fraction of its pixel covered by the disc, estimated on a
    /// 16x16 grid of subpixel samples. All-zero border rows and columns are trimmed,
    /// so a radius of 0.5 yields the 1x1 identity.
    pub fn pillbox(radius: f64) -> Result<Self> {
        Self::pillbox_with_samples(radius, PILLBOX_SUBSAMPLES)
    }

    pub fn pillbox_with_samples(radius: f64, samples: usize) -> Result<Self> {
        if !(radius >= 0.5) || !radius.is_finite() {
            return Err(PgqError::Domain(format!(
                "pill-box radius must be at least 0.5, got {radius}"
            )));
        }
        if samples == 0 {
            return Err(PgqError::Domain("subsample count must be positive".into()));
        }
        let half = radius.ceil() as usize;
        let size = 2 * half + 1;
        let r2 = radius * radius;
        let offsets: Vec<f64> = (0..samples)
            .map(|s| (s as f64 + 0.5) / samples as f64 - 0.5)
            .collect();

        let mut counts = vec![0u64; size * size];
        for i in 0..size {
            let dy = i as f64 - half as f64;
            for j in 0..size {
                let dx = j as f64 - half as f64;
                let mut inside = 0u64;
                for oy in &offsets {
                    let y = dy + oy;
                    for ox in &offsets {
                        let x = dx + ox;
                        if x * x + y * y <= r2 {
                            inside += 1;
                        }
                    }
                }
                counts[i * size + j] = inside;
            }
        }

        // Trim symmetric zero rings so the support is as tight as the disc allows.
        let mut trim = 0;
        while trim < half {
            let lo = trim;
            let hi = size - 1 - trim;
            let ring_empty = (lo..=hi).all(|t| {
                counts[lo * size + t] == 0
                    && counts[hi * size + t] == 0
                    && counts[t * size + lo] == 0
                    && counts[t * size + hi] == 0
            });
            if !ring_empty {
                break;
            }
            trim += 1;
        }
        let inner = size - 2 * trim;
        let total: u64 = counts.iter().sum();
        let mut taps = Vec::with_capacity(inner * inner);
        for i in trim..trim + inner {
            for j in trim..trim + inner {
                taps.push(counts[i * size + j] as f64 / total as f64);
            }
        }
        Ok(Self {
            width: inner,
            height: inner,
            taps,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Tap at (`col`, `row`) in kernel coordinates (origin at top-left).
    #[inline]
    pub fn tap(&self, col: usize, row: usize) -> f64 {
        self.taps[row * self.width + col]
    }

    #[inline]
    pub fn center(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    pub fn is_identity(&self) -> bool {
        self.width == 1 && self.height == 1
    }

    /// Larger of the two kernel dimensions.
    pub fn size(&self) -> usize {
        self.width.max(self.height)
    }

    pub fn to_grid(&self) -> ImageGrid {
        ImageGrid::new(self.width, self.height, self.taps.clone()).expect("kernel dims are valid")
    }
}
