use log::debug;

use crate::convolve::PaddedBlur;
use crate::error::{PgqError, Result};
use crate::grid::ImageGrid;
use crate::kernel::Kernel;
use crate::noise::NoiseParams;

use super::config::SolverConfig;
use super::fidelity::{PgqFidelity, PixelFidelity};
use super::updates::{beta_from_noise, lambda_update, relative_change, step_size_map};
use super::BaselineEstimator;

/// Iterates of the splitting loop.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: ImageGrid,
    /// Blurred estimate `x * k` matching `x`.
    pub x_k: ImageGrid,
    pub tau: ImageGrid,
    pub lambda: ImageGrid,
    pub iter: usize,
    pub last_rel_change: f64,
}

/// Output of a restoration run.
#[derive(Debug, Clone)]
pub struct Restoration {
    pub image: ImageGrid,
    pub iterations: usize,
    pub converged: bool,
}

/// The generic splitting solver, stepping one outer iteration at a time.
pub struct SplittingSolver<F, B> {
    kernel: Kernel,
    fidelity: F,
    baseline: B,
    cfg: SolverConfig,
    beta: f64,
    gamma: ImageGrid,
    blur: PaddedBlur,
    state: SolverState,
    converged: bool,
}

impl<F: PixelFidelity, B: BaselineEstimator> SplittingSolver<F, B> {
    pub fn new(
        y: &ImageGrid,
        k: &Kernel,
        fidelity: F,
        baseline: B,
        cfg: SolverConfig,
        beta: f64,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(PgqError::Config(format!(
                "beta must be positive, got {beta}"
            )));
        }
        let (w, h) = y.dims();
        let tau = ImageGrid::from_fn(w, h, |c, r| fidelity.initial_tau(r * w + c));
        let blur = PaddedBlur::new(w, h, k, cfg.boundary)?;
        Ok(Self {
            kernel: k.clone(),
            gamma: step_size_map(y, &cfg),
            fidelity,
            baseline,
            cfg,
            beta,
            blur,
            state: SolverState {
                x: ImageGrid::zeros(w, h),
                x_k: ImageGrid::zeros(w, h),
                tau,
                lambda: ImageGrid::zeros(w, h),
                iter: 0,
                last_rel_change: f64::INFINITY,
            },
            converged: false,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    /// Mean `|tau - x_k|` over the image.
    pub fn constraint_residual(&self) -> f64 {
        let s = &self.state;
        s.tau
            .data()
            .iter()
            .zip(s.x_k.data())
            .map(|(t, xk)| (t - xk).abs())
            .sum::<f64>()
            / s.tau.len() as f64
    }

    /// Input handed to the baseline at the next iteration, `tau - lambda / beta`.
    pub fn baseline_input(&self) -> ImageGrid {
        let beta = self.beta;
        self.state
            .tau
            .zip_map(&self.state.lambda, |t, l| t - l / beta)
    }

    /// Updates `x` through the baseline.
    pub fn x_step(&mut self) -> Result<()> {
        let input = self.baseline_input();
        let sigma = (1.0 / self.beta).sqrt();
        let x_new = self.baseline.solve(&input, &self.kernel, sigma)?;
        let iter = self.state.iter + 1;
        if !x_new.same_dims(&input) {
            return Err(PgqError::Baseline(format!(
                "{} returned {}x{} for a {}x{} input",
                self.baseline.name(),
                x_new.width(),
                x_new.height(),
                input.width(),
                input.height()
            )));
        }
        if !x_new.is_finite() {
            return Err(PgqError::NonFinite {
                iter,
                what: format!("{} output", self.baseline.name()),
            });
        }
        self.state.last_rel_change =
            relative_change(&x_new, &self.state.x).unwrap_or(f64::INFINITY);
        self.converged = crate::solver::stopping_check(&x_new, &self.state.x, self.cfg.epsilon);
        self.state.x_k = self.blur.apply(&x_new);
        self.state.x = x_new;
        Ok(())
    }

    /// Per-pixel likelihood step for `tau`.
    pub fn tau_step(&mut self) {
        let beta = self.beta;
        let s = &mut self.state;
        for (i, (t, (&xk, &l))) in s
            .tau
            .data_mut()
            .iter_mut()
            .zip(s.x_k.data().iter().zip(s.lambda.data()))
            .enumerate()
        {
            *t = self.fidelity.prox(i, xk, l, beta);
        }
    }

    pub fn lambda_step(&mut self) {
        let beta = self.beta;
        let s = &mut self.state;
        for (l, ((&t, &xk), &g)) in s
            .lambda
            .data_mut()
            .iter_mut()
            .zip(s.tau.data().iter().zip(s.x_k.data()).zip(self.gamma.data()))
        {
            *l = lambda_update(*l, g, beta, t, xk);
        }
    }

    /// One outer iteration; returns whether the stopping rule fired.
    pub fn step(&mut self) -> Result<bool> {
        self.x_step()?;
        self.tau_step();
        self.lambda_step();
        self.state.iter += 1;
        let s = &self.state;
        if !s.tau.is_finite() || !s.lambda.is_finite() {
            return Err(PgqError::NonFinite {
                iter: s.iter,
                what: "split variable or multiplier".into(),
            });
        }
        debug!(
            "outer iter {}: rel change {:.3e}, residual {:.3e}",
            s.iter,
            s.last_rel_change,
            self.constraint_residual()
        );
        Ok(self.converged)
    }

    pub fn run(mut self) -> Result<Restoration> {
        while self.state.iter < self.cfg.max_iters {
            if self.step()? {
                break;
            }
        }
        Ok(Restoration {
            iterations: self.state.iter,
            converged: self.converged,
            image: self.state.x,
        })
    }

    /// Augmented cost without the prior term:
    /// `beta/2 |tau - x_k|^2 - <lambda, tau - x_k> + sum L(tau)`.
    pub fn coupling_cost(&self) -> f64 {
        let s = &self.state;
        let mut total = 0.0;
        for i in 0..s.tau.len() {
            let d = s.tau.data()[i] - s.x_k.data()[i];
            total += 0.5 * self.beta * d * d - s.lambda.data()[i] * d
                + self.fidelity.loss(i, s.tau.data()[i]);
        }
        total
    }
}

fn check_observation(y: &ImageGrid) -> Result<()> {
    if y.data().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(PgqError::Domain(
            "observation must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

/// Restores `y` under the Poisson-Gaussian-quantization model using `baseline`
/// for every `x` update.
pub fn restore<B: BaselineEstimator>(
    y: &ImageGrid,
    k: &Kernel,
    params: &NoiseParams,
    baseline: B,
    cfg: &SolverConfig,
) -> Result<Restoration> {
    params.validate()?;
    check_observation(y)?;
    let beta = beta_from_noise(y, params, cfg.beta0)?;
    let fidelity = PgqFidelity::new(y, *params);
    SplittingSolver::new(y, k, fidelity, baseline, *cfg, beta)?.run()
}

/// Splitting loop with an arbitrary per-pixel data term and penalty `beta`.
pub fn restore_with<F: PixelFidelity, B: BaselineEstimator>(
    y: &ImageGrid,
    k: &Kernel,
    fidelity: F,
    baseline: B,
    cfg: &SolverConfig,
    beta: f64,
) -> Result<Restoration> {
    SplittingSolver::new(y, k, fidelity, baseline, *cfg, beta)?.run()
}
