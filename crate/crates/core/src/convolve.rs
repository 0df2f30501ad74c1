//! Convolution with periodic or blended-extension boundaries, plus the padding
//! and cropping helpers used by the Fourier-domain solvers.

use num_complex::Complex64;

use crate::error::{PgqError, Result};
use crate::fft::Fft2;
use crate::grid::ImageGrid;
use crate::kernel::Kernel;

/// Boundary model for [`convolve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Circular wrap-around.
    Periodic,
    /// Pad by one kernel size per side with [`Fill::LinearBlend`], convolve
    /// periodically, then crop back.
    Extended,
}

/// Fill rule for [`extend_blend`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fill {
    Zeros,
    /// Linear interpolation between the values on opposite image borders, which
    /// makes the padded image continuous under periodic wrap.
    LinearBlend,
}

pub fn convolve(img: &ImageGrid, k: &Kernel, boundary: Boundary) -> Result<ImageGrid> {
    check_kernel_fits(img, k)?;
    match boundary {
        Boundary::Periodic => Ok(convolve_periodic_fft(img, k)),
        Boundary::Extended => {
            let (mx, my) = (k.width(), k.height());
            let ext = extend_blend(img, mx, my, Fill::LinearBlend);
            let out = convolve_periodic_fft(&ext, k);
            crop(&out, mx, my)
        }
    }
}

fn check_kernel_fits(img: &ImageGrid, k: &Kernel) -> Result<()> {
    if k.width() > img.width() || k.height() > img.height() {
        return Err(PgqError::Dimension(format!(
            "kernel {}x{} larger than image {}x{}",
            k.width(),
            k.height(),
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// Per-side padding used by the Fourier-domain solvers: six kernel widths, or
/// six pixels for the identity kernel.
pub fn solver_margin(k: &Kernel) -> (usize, usize) {
    (6 * k.width(), 6 * k.height())
}

/// Boundary treatment inside the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverBoundary {
    /// Pad by [`solver_margin`] (blend for images, zeros for gradients), solve
    /// periodically on the padded grid, crop back.
    #[default]
    Extended,
    /// Treat the image itself as periodic; no padding.
    Periodic,
}

impl SolverBoundary {
    pub fn margins(self, k: &Kernel) -> (usize, usize) {
        match self {
            SolverBoundary::Extended => solver_margin(k),
            SolverBoundary::Periodic => (0, 0),
        }
    }
}

/// Blur operator on the padded grid used by the solvers, with the FFT plan
/// and kernel spectrum cached.
#[derive(Debug)]
pub struct PaddedBlur {
    margin_x: usize,
    margin_y: usize,
    plan: Fft2,
    spectrum: Vec<Complex64>,
    identity: bool,
}

impl PaddedBlur {
    pub fn new(width: usize, height: usize, k: &Kernel, boundary: SolverBoundary) -> Result<Self> {
        let (margin_x, margin_y) = boundary.margins(k);
        let plan = Fft2::new(width + 2 * margin_x, height + 2 * margin_y);
        if k.width() > plan.width() || k.height() > plan.height() {
            return Err(PgqError::Dimension(
                "kernel larger than padded image".into(),
            ));
        }
        let spectrum = kernel_spectrum(k, &plan);
        Ok(Self {
            margin_x,
            margin_y,
            plan,
            spectrum,
            identity: k.is_identity(),
        })
    }

    pub fn apply(&self, x: &ImageGrid) -> ImageGrid {
        if self.identity {
            return x.clone();
        }
        let ext = extend_blend(x, self.margin_x, self.margin_y, Fill::LinearBlend);
        let mut f = self.plan.forward_real(ext.data());
        for (a, b) in f.iter_mut().zip(&self.spectrum) {
            *a *= b;
        }
        self.plan.inverse(&mut f);
        let out = ImageGrid::new(ext.width(), ext.height(), f.iter().map(|v| v.re).collect())
            .expect("padded dims");
        crop(&out, self.margin_x, self.margin_y).expect("margins fit by construction")
    }
}

/// Spectrum of `k` embedded in a `width` x `height` periodic grid with its
/// center tap at the origin.
pub fn kernel_spectrum(k: &Kernel, plan: &Fft2) -> Vec<Complex64> {
    let (w, h) = (plan.width(), plan.height());
    let (cx, cy) = k.center();
    let mut buf = vec![Complex64::default(); w * h];
    for r in 0..k.height() {
        let rr = (r + h - cy % h) % h;
        for c in 0..k.width() {
            let cc = (c + w - cx % w) % w;
            buf[rr * w + cc].re += k.tap(c, r);
        }
    }
    plan.forward(&mut buf);
    buf
}

fn convolve_periodic_fft(img: &ImageGrid, k: &Kernel) -> ImageGrid {
    if k.is_identity() {
        return img.clone();
    }
    let plan = Fft2::new(img.width(), img.height());
    let kf = kernel_spectrum(k, &plan);
    let mut f = plan.forward_real(img.data());
    for (a, b) in f.iter_mut().zip(&kf) {
        *a *= b;
    }
    plan.inverse(&mut f);
    ImageGrid::new(img.width(), img.height(), f.iter().map(|v| v.re).collect())
        .expect("same dimensions as input")
}

/// Direct spatial circular convolution, `O(N * K)`.
pub fn convolve_spatial_periodic(img: &ImageGrid, k: &Kernel) -> Result<ImageGrid> {
    check_kernel_fits(img, k)?;
    let (w, h) = img.dims();
    let (cx, cy) = k.center();
    let mut out = ImageGrid::zeros(w, h);
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for kr in 0..k.height() {
                let sr = (r + h + cy - kr) % h;
                for kc in 0..k.width() {
                    let sc = (c + w + cx - kc) % w;
                    acc += k.tap(kc, kr) * img.get(sc, sr);
                }
            }
            out.set(c, r, acc);
        }
    }
    Ok(out)
}

/// Pads `img` by `margin_x` columns and `margin_y` rows on every side.
pub fn extend_blend(img: &ImageGrid, margin_x: usize, margin_y: usize, fill: Fill) -> ImageGrid {
    if margin_x == 0 && margin_y == 0 {
        return img.clone();
    }
    let (w, h) = img.dims();
    let ew = w + 2 * margin_x;
    let eh = h + 2 * margin_y;
    let mut out = ImageGrid::zeros(ew, eh);
    for r in 0..h {
        for c in 0..w {
            out.set(c + margin_x, r + margin_y, img.get(c, r));
        }
    }
    if fill == Fill::Zeros {
        return out;
    }

    // Horizontal blend on the image rows, then vertical blend on every column
    // of the widened grid so the corners are filled consistently.
    if margin_x > 0 {
        let span = (2 * margin_x + 1) as f64;
        for r in margin_y..margin_y + h {
            let left = out.get(margin_x, r);
            let right = out.get(margin_x + w - 1, r);
            for j in 1..=2 * margin_x {
                let v = right + (left - right) * (j as f64 / span);
                let col = (margin_x + w - 1 + j) % ew;
                out.set(col, r, v);
            }
        }
    }
    if margin_y > 0 {
        let span = (2 * margin_y + 1) as f64;
        for c in 0..ew {
            let top = out.get(c, margin_y);
            let bottom = out.get(c, margin_y + h - 1);
            for j in 1..=2 * margin_y {
                let v = bottom + (top - bottom) * (j as f64 / span);
                let row = (margin_y + h - 1 + j) % eh;
                out.set(c, row, v);
            }
        }
    }
    out
}

/// Removes `margin_x` columns and `margin_y` rows from every side.
pub fn crop(img: &ImageGrid, margin_x: usize, margin_y: usize) -> Result<ImageGrid> {
    let (w, h) = img.dims();
    if 2 * margin_x >= w || 2 * margin_y >= h {
        return Err(PgqError::Dimension(format!(
            "crop margins ({margin_x},{margin_y}) too large for {w}x{h}"
        )));
    }
    if margin_x == 0 && margin_y == 0 {
        return Ok(img.clone());
    }
    img.window(margin_x, margin_y, w - 2 * margin_x, h - 2 * margin_y)
}
