//! Variable-splitting restoration: an augmented Lagrangian loop that alternates
//! a black-box AWGN restoration, a closed-form per-pixel likelihood step and a
//! multiplier step.

mod config;
mod fidelity;
mod restore;
mod updates;

pub use config::{SolverConfig, GAMMA_MAX};
pub use fidelity::{PgqFidelity, PixelFidelity, QuadraticFidelity};
pub use restore::{restore, restore_with, Restoration, SolverState, SplittingSolver};
pub use updates::{
    beta_from_noise, lambda_update, relative_change, step_size_map, stopping_check, tau_update,
};

use crate::error::Result;
use crate::grid::ImageGrid;
use crate::kernel::Kernel;

/// An AWGN restoration method `G(y, k, sigma)`, minimizing its own prior plus
/// `sum (y - x*k)^2 / (2 sigma^2)`.
///
/// Implementations must be deterministic and return an image of the same size
/// as `y`.
pub trait BaselineEstimator {
    fn solve(&self, y: &ImageGrid, k: &Kernel, sigma: f64) -> Result<ImageGrid>;

    fn name(&self) -> &str {
        "baseline"
    }
}

impl<B: BaselineEstimator + ?Sized> BaselineEstimator for &B {
    fn solve(&self, y: &ImageGrid, k: &Kernel, sigma: f64) -> Result<ImageGrid> {
        (**self).solve(y, k, sigma)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}
