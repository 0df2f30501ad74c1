//! Restoration of blurred images corrupted by mixed Poisson-Gaussian noise and
//! quantization.
//!
//! The main entry points are [`solver::restore`], which wraps any AWGN
//! restoration method implementing [`BaselineEstimator`], and
//! [`admtv::joint_solve`], a fused total-variation solver. [`noise::corrupt`]
//! simulates observations and [`harness`] reproduces PSNR benchmark tables.

pub mod admtv;
pub mod convolve;
mod error;
pub mod fft;
pub mod grid;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod metrics;
pub mod noise;
pub mod solver;

#[cfg(test)]
pub(crate) mod testutil;

pub use admtv::{awgn_solve, joint_solve, AdmTvParams, TvBaseline};
pub use convolve::{convolve, crop, extend_blend, Boundary, Fill, SolverBoundary};
pub use error::{PgqError, Result};
pub use grid::ImageGrid;
pub use kernel::Kernel;
pub use metrics::psnr;
pub use noise::{corrupt, NoiseParams, QuantMoments};
pub use solver::{restore, BaselineEstimator, Restoration, SolverConfig, GAMMA_MAX};
