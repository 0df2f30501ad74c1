//! Two-dimensional FFT over row-major complex buffers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward and inverse plans for a fixed `width` x `height` grid.
///
/// Transforms run row-wise, then column-wise through a transpose. The inverse is
/// normalized so that `inverse(forward(x)) == x` up to rounding.
pub struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        let row_fwd = planner.plan_fft_forward(width);
        let row_inv = planner.plan_fft_inverse(width);
        let col_fwd = planner.plan_fft_forward(height);
        let col_inv = planner.plan_fft_inverse(height);
        let scratch_len = [
            row_fwd.get_inplace_scratch_len(),
            row_inv.get_inplace_scratch_len(),
            col_fwd.get_inplace_scratch_len(),
            col_inv.get_inplace_scratch_len(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        Self {
            width,
            height,
            row_fwd,
            row_inv,
            col_fwd,
            col_inv,
            scratch_len,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.process(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.process(buf, true);
        let scale = 1.0 / self.len() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// Forward transform of a real buffer.
    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Forward transforms of two real buffers computed with one complex FFT.
    pub fn forward_real_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        assert_eq!(a.len(), self.len());
        assert_eq!(b.len(), self.len());
        let mut z: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        self.forward(&mut z);
        let (w, h) = (self.width, self.height);
        let mut fa = vec![Complex64::default(); z.len()];
        let mut fb = vec![Complex64::default(); z.len()];
        for r in 0..h {
            let rn = (h - r) % h;
            for c in 0..w {
                let cn = (w - c) % w;
                let zk = z[r * w + c];
                let zn = z[rn * w + cn].conj();
                fa[r * w + c] = (zk + zn) * 0.5;
                // (zk - zn) / (2i)
                let d = zk - zn;
                fb[r * w + c] = Complex64::new(d.im * 0.5, -d.re * 0.5);
            }
        }
        (fa, fb)
    }

    /// Inverse transform of two Hermitian spectra, returning both real signals.
    pub fn inverse_real_pair(&self, fa: &[Complex64], fb: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut z: Vec<Complex64> = fa
            .iter()
            .zip(fb)
            .map(|(&a, &b)| a + Complex64::new(-b.im, b.re))
            .collect();
        self.inverse(&mut z);
        let re = z.iter().map(|v| v.re).collect();
        let im = z.iter().map(|v| v.im).collect();
        (re, im)
    }

    fn process(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.len(), "buffer does not match FFT plan");
        let (w, h) = (self.width, self.height);
        let mut scratch = vec![Complex64::default(); self.scratch_len];
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        if w > 1 {
            for line in buf.chunks_exact_mut(w) {
                row.process_with_scratch(line, &mut scratch);
            }
        }
        if h > 1 {
            let mut t = transpose(w, h, buf);
            for line in t.chunks_exact_mut(h) {
                col.process_with_scratch(line, &mut scratch);
            }
            let back = transpose(h, w, &t);
            buf.copy_from_slice(&back);
        }
    }
}

fn transpose(width: usize, height: usize, src: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); src.len()];
    const BLOCK: usize = 32;
    for rb in (0..height).step_by(BLOCK) {
        for cb in (0..width).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(height) {
                for c in cb..(cb + BLOCK).min(width) {
                    out[c * height + r] = src[r * width + c];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(w: usize, h: usize, x: &[f64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); w * h];
        for kr in 0..h {
            for kc in 0..w {
                let mut acc = Complex64::default();
                for r in 0..h {
                    for c in 0..w {
                        let phase = -2.0
                            * std::f64::consts::PI
                            * ((kr * r) as f64 / h as f64 + (kc * c) as f64 / w as f64);
                        acc += Complex64::from_polar(x[r * w + c], phase);
                    }
                }
                out[kr * w + kc] = acc;
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft_and_inverts() {
        let (w, h) = (6, 5);
        let x: Vec<f64> = (0..w * h).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let plan = Fft2::new(w, h);
        let fx = plan.forward_real(&x);
        let oracle = naive_dft(w, h, &x);
        for (a, b) in fx.iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-10);
        }
        let mut back = fx.clone();
        plan.inverse(&mut back);
        for (a, b) in back.iter().zip(&x) {
            assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn real_pair_packing() {
        let (w, h) = (7, 4);
        let a: Vec<f64> = (0..w * h).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..w * h).map(|i| (i as f64 * 1.3).cos()).collect();
        let plan = Fft2::new(w, h);
        let (fa, fb) = plan.forward_real_pair(&a, &b);
        let ea = plan.forward_real(&a);
        let eb = plan.forward_real(&b);
        for i in 0..w * h {
            assert!((fa[i] - ea[i]).norm() < 1e-12);
            assert!((fb[i] - eb[i]).norm() < 1e-12);
        }
        let (ra, rb) = plan.inverse_real_pair(&fa, &fb);
        for i in 0..w * h {
            assert!((ra[i] - a[i]).abs() < 1e-12);
            assert!((rb[i] - b[i]).abs() < 1e-12);
        }
    }
}
