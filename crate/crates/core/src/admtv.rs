//! ADM-TV: total-variation restoration by alternating direction minimization.
//!
//! Two entry points share one iteration engine. [`awgn_solve`] is the plain
//! Gaussian-noise solver and doubles as a [`BaselineEstimator`]. [`joint_solve`]
//! fuses the TV splitting with the Poisson-Gaussian splitting so that the
//! gradient, image, likelihood and multiplier updates all run in one loop.

use log::{debug, warn};
use num_complex::Complex64;

use crate::convolve::{crop, extend_blend, kernel_spectrum, Fill, SolverBoundary};
use crate::error::{PgqError, Result};
use crate::fft::Fft2;
use crate::grid::ImageGrid;
use crate::kernel::Kernel;
use crate::noise::NoiseParams;
use crate::solver::{
    beta_from_noise, lambda_update, relative_change, step_size_map, stopping_check,
    BaselineEstimator, PgqFidelity, PixelFidelity, Restoration, SolverConfig, GAMMA_MAX,
};

/// TV prior weight, gradient penalty and inner stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmTvParams {
    pub kappa: f64,
    pub beta_nabla: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub boundary: SolverBoundary,
}

impl Default for AdmTvParams {
    fn default() -> Self {
        Self {
            kappa: 8.0,
            beta_nabla: 200.0,
            epsilon: 1e-5,
            max_iters: 100,
            boundary: SolverBoundary::Extended,
        }
    }
}

impl AdmTvParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if pos(self.kappa) && pos(self.beta_nabla) && pos(self.epsilon) && self.max_iters > 0 {
            Ok(())
        } else {
            Err(PgqError::Config(format!(
                "ADM-TV parameters must be positive: kappa={} beta_nabla={} epsilon={} max_iters={}",
                self.kappa, self.beta_nabla, self.epsilon, self.max_iters
            )))
        }
    }
}

/// Auxiliary gradients `d_i` and their multipliers `lambda_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub d_h: ImageGrid,
    pub d_v: ImageGrid,
    pub lam_h: ImageGrid,
    pub lam_v: ImageGrid,
}

impl GradientField {
    pub fn zeros(width: usize, height: usize) -> Self {
        let z = ImageGrid::zeros(width, height);
        Self {
            d_h: z.clone(),
            d_v: z.clone(),
            lam_h: z.clone(),
            lam_v: z,
        }
    }
}

/// Isotropic soft-shrinkage of `(x_h, x_v) + (lam_h, lam_v) / beta_nabla` with
/// threshold `kappa / beta_nabla`.
pub fn shrink_gradients(
    x_h: &ImageGrid,
    x_v: &ImageGrid,
    lam_h: &ImageGrid,
    lam_v: &ImageGrid,
    kappa: f64,
    beta_nabla: f64,
) -> (ImageGrid, ImageGrid) {
    let mut d_h = ImageGrid::zeros(x_h.width(), x_h.height());
    let mut d_v = d_h.clone();
    shrink_into(
        x_h, x_v, lam_h, lam_v, kappa, beta_nabla, &mut d_h, &mut d_v,
    );
    (d_h, d_v)
}

#[allow(clippy::too_many_arguments)]
fn shrink_into(
    x_h: &ImageGrid,
    x_v: &ImageGrid,
    lam_h: &ImageGrid,
    lam_v: &ImageGrid,
    kappa: f64,
    beta_nabla: f64,
    d_h: &mut ImageGrid,
    d_v: &mut ImageGrid,
) {
    let inv = 1.0 / beta_nabla;
    let thresh = kappa * inv;
    let n = x_h.len();
    let (xh, xv, lh, lv) = (x_h.data(), x_v.data(), lam_h.data(), lam_v.data());
    let dh = d_h.data_mut();
    for i in 0..n {
        let a = xh[i] + inv * lh[i];
        let b = xv[i] + inv * lv[i];
        let mag = (a * a + b * b).sqrt();
        dh[i] = if mag > thresh {
            (mag - thresh) / mag * a
        } else {
            0.0
        };
    }
    let dv = d_v.data_mut();
    for i in 0..n {
        let a = xh[i] + inv * lh[i];
        let b = xv[i] + inv * lv[i];
        let mag = (a * a + b * b).sqrt();
        dv[i] = if mag > thresh {
            (mag - thresh) / mag * b
        } else {
            0.0
        };
    }
}

/// Periodic forward differences `(x(c+1) - x(c), x(r+1) - x(r))`.
pub fn gradients(x: &ImageGrid) -> (ImageGrid, ImageGrid) {
    let (w, h) = x.dims();
    let gh = ImageGrid::from_fn(w, h, |c, r| x.get((c + 1) % w, r) - x.get(c, r));
    let gv = ImageGrid::from_fn(w, h, |c, r| x.get(c, (r + 1) % h) - x.get(c, r));
    (gh, gv)
}

/// Isotropic total variation `sum sqrt(|x_h|^2 + |x_v|^2)` with periodic differences.
pub fn tv_norm(x: &ImageGrid) -> f64 {
    let (gh, gv) = gradients(x);
    gh.data()
        .iter()
        .zip(gv.data())
        .map(|(a, b)| (a * a + b * b).sqrt())
        .sum()
}

/// Images produced by one Fourier-domain `x` solve, cropped to the working grid.
#[derive(Debug, Clone)]
pub struct XUpdate {
    pub x: ImageGrid,
    pub x_k: ImageGrid,
    pub x_h: ImageGrid,
    pub x_v: ImageGrid,
}

/// The quadratic `x` subproblem diagonalized by the FFT on the padded grid.
struct FourierSystem {
    plan: Fft2,
    margin_x: usize,
    margin_y: usize,
    k_hat: Vec<Complex64>,
    gh_hat: Vec<Complex64>,
    gv_hat: Vec<Complex64>,
    inv_denom: Vec<f64>,
    beta: f64,
    beta_nabla: f64,
}

impl FourierSystem {
    fn new(
        width: usize,
        height: usize,
        k: &Kernel,
        beta: f64,
        beta_nabla: f64,
        margins: (usize, usize),
    ) -> Result<Self> {
        let (margin_x, margin_y) = margins;
        let (ew, eh) = (width + 2 * margin_x, height + 2 * margin_y);
        if k.width() > ew || k.height() > eh {
            return Err(PgqError::Dimension(format!(
                "kernel {}x{} larger than working grid {ew}x{eh}",
                k.width(),
                k.height()
            )));
        }
        let plan = Fft2::new(ew, eh);
        let k_hat = kernel_spectrum(k, &plan);
        let gh_hat = difference_spectrum(&plan, true);
        let gv_hat = difference_spectrum(&plan, false);
        let mut inv_denom = Vec::with_capacity(ew * eh);
        for i in 0..ew * eh {
            let den = beta_nabla * (gh_hat[i].norm_sqr() + gv_hat[i].norm_sqr())
                + beta * k_hat[i].norm_sqr();
            if !(den > 1e-300) {
                return Err(PgqError::Config(
                    "x-update denominator vanishes at some frequency".into(),
                ));
            }
            inv_denom.push(1.0 / den);
        }
        Ok(Self {
            plan,
            margin_x,
            margin_y,
            k_hat,
            gh_hat,
            gv_hat,
            inv_denom,
            beta,
            beta_nabla,
        })
    }

    /// Solves for `x` given `d~_i` and `tau~` on the working grid.
    fn solve(&self, dt_h: &ImageGrid, dt_v: &ImageGrid, tau_t: &ImageGrid) -> XUpdate {
        let (mx, my) = (self.margin_x, self.margin_y);
        let eh = extend_blend(dt_h, mx, my, Fill::Zeros);
        let ev = extend_blend(dt_v, mx, my, Fill::Zeros);
        let et = extend_blend(tau_t, mx, my, Fill::LinearBlend);
        let (fh, fv) = self.plan.forward_real_pair(eh.data(), ev.data());
        let ft = self.plan.forward_real(et.data());

        let n = self.plan.len();
        let mut x_hat = Vec::with_capacity(n);
        let mut xk_hat = Vec::with_capacity(n);
        let mut xh_hat = Vec::with_capacity(n);
        let mut xv_hat = Vec::with_capacity(n);
        for i in 0..n {
            let num = (self.gh_hat[i].conj() * fh[i] + self.gv_hat[i].conj() * fv[i])
                * self.beta_nabla
                + self.k_hat[i].conj() * ft[i] * self.beta;
            let xf = num * self.inv_denom[i];
            x_hat.push(xf);
            xk_hat.push(xf * self.k_hat[i]);
            xh_hat.push(xf * self.gh_hat[i]);
            xv_hat.push(xf * self.gv_hat[i]);
        }
        let (ew, ehh) = (self.plan.width(), self.plan.height());
        let (x, x_k) = self.plan.inverse_real_pair(&x_hat, &xk_hat);
        let (x_h, x_v) = self.plan.inverse_real_pair(&xh_hat, &xv_hat);
        let back = |v: Vec<f64>| {
            let g = ImageGrid::new(ew, ehh, v).expect("working grid dims");
            crop(&g, mx, my).expect("margins fit by construction")
        };
        XUpdate {
            x: back(x),
            x_k: back(x_k),
            x_h: back(x_h),
            x_v: back(x_v),
        }
    }
}

/// Spectrum of the forward difference filter `[-1, 1]` along one axis.
fn difference_spectrum(plan: &Fft2, horizontal: bool) -> Vec<Complex64> {
    let (w, h) = (plan.width(), plan.height());
    let mut buf = vec![Complex64::default(); w * h];
    // (x * f)(n) = x(n + e) - x(n): tap -1 at the origin, +1 at offset -e
    buf[0].re -= 1.0;
    if horizontal {
        buf[(w - 1) % w].re += 1.0;
    } else {
        buf[((h - 1) % h) * w].re += 1.0;
    }
    plan.forward(&mut buf);
    buf
}

/// Exact minimizer of `beta_nabla sum_i |d~_i - x * grad_i|^2 + beta |tau~ - x * k|^2`
/// on the periodic grid of `tau`, where `d~_i = d_i - lambda_i / beta_nabla` and
/// `tau~ = tau - lambda / beta`. Callers pad the inputs beforehand when the
/// image is not periodic.
pub fn x_fourier_update(
    d: &GradientField,
    tau: &ImageGrid,
    lambda: &ImageGrid,
    k: &Kernel,
    beta: f64,
    beta_nabla: f64,
) -> Result<ImageGrid> {
    let (w, h) = tau.dims();
    for g in [&d.d_h, &d.d_v, &d.lam_h, &d.lam_v, lambda] {
        tau.ensure_same_dims(g, "x_fourier_update")?;
    }
    if !(beta >= 0.0) || !(beta_nabla >= 0.0) {
        return Err(PgqError::Config("penalties must be nonnegative".into()));
    }
    let system = FourierSystem::new(w, h, k, beta, beta_nabla, (0, 0))?;
    let (dt_h, dt_v) = if beta_nabla > 0.0 {
        (
            d.d_h.zip_map(&d.lam_h, |a, l| a - l / beta_nabla),
            d.d_v.zip_map(&d.lam_v, |a, l| a - l / beta_nabla),
        )
    } else {
        (ImageGrid::zeros(w, h), ImageGrid::zeros(w, h))
    };
    let tau_t = if beta > 0.0 {
        tau.zip_map(lambda, |t, l| t - l / beta)
    } else {
        ImageGrid::zeros(w, h)
    };
    Ok(system.solve(&dt_h, &dt_v, &tau_t).x)
}

/// Likelihood coupling active in the fused mode.
struct Coupling {
    fidelity: PgqFidelity,
    gamma: ImageGrid,
    warmup: usize,
}

/// Step-by-step ADM-TV iteration, either pure AWGN or fused with the
/// Poisson-Gaussian splitting.
pub struct AdmTvSolver {
    system: FourierSystem,
    kappa: f64,
    beta: f64,
    beta_nabla: f64,
    epsilon: f64,
    max_iters: usize,
    grad: GradientField,
    x: ImageGrid,
    x_k: ImageGrid,
    x_h: ImageGrid,
    x_v: ImageGrid,
    tau: ImageGrid,
    lambda: ImageGrid,
    coupling: Option<Coupling>,
    iter: usize,
    converged: bool,
    last_rel_change: f64,
}

impl AdmTvSolver {
    /// AWGN solver with quadratic weight `beta = 1 / sigma^2` and data `y`.
    pub fn awgn(y: &ImageGrid, k: &Kernel, beta: f64, p: &AdmTvParams) -> Result<Self> {
        p.validate()?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(PgqError::Config(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Self::build(y, k, beta, p, y.clone(), None, p.epsilon, p.max_iters)
    }

    /// Fused solver for the Poisson-Gaussian-quantization model.
    pub fn joint(
        y: &ImageGrid,
        k: &Kernel,
        params: &NoiseParams,
        p: &AdmTvParams,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        p.validate()?;
        cfg.validate()?;
        params.validate()?;
        if y.data().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(PgqError::Domain(
                "observation must be finite and nonnegative".into(),
            ));
        }
        let beta = beta_from_noise(y, params, cfg.beta0)?;
        let fidelity = PgqFidelity::new(y, *params);
        let (w, h) = y.dims();
        let tau = ImageGrid::from_fn(w, h, |c, r| fidelity.initial_tau(r * w + c));
        let coupling = Coupling {
            fidelity,
            gamma: step_size_map(y, cfg),
            warmup: cfg.warmup_iters,
        };
        Self::build(
            y,
            k,
            beta,
            p,
            tau,
            Some(coupling),
            cfg.epsilon,
            cfg.max_iters,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        y: &ImageGrid,
        k: &Kernel,
        beta: f64,
        p: &AdmTvParams,
        tau: ImageGrid,
        coupling: Option<Coupling>,
        epsilon: f64,
        max_iters: usize,
    ) -> Result<Self> {
        let (w, h) = y.dims();
        let system = FourierSystem::new(w, h, k, beta, p.beta_nabla, p.boundary.margins(k))?;
        let zeros = ImageGrid::zeros(w, h);
        Ok(Self {
            system,
            kappa: p.kappa,
            beta,
            beta_nabla: p.beta_nabla,
            epsilon,
            max_iters,
            grad: GradientField::zeros(w, h),
            x: zeros.clone(),
            x_k: zeros.clone(),
            x_h: zeros.clone(),
            x_v: zeros.clone(),
            tau,
            lambda: zeros,
            coupling,
            iter: 0,
            converged: false,
            last_rel_change: f64::INFINITY,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn iterations(&self) -> usize {
        self.iter
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    pub fn last_rel_change(&self) -> f64 {
        self.last_rel_change
    }

    pub fn x(&self) -> &ImageGrid {
        &self.x
    }

    pub fn x_k(&self) -> &ImageGrid {
        &self.x_k
    }

    pub fn tau(&self) -> &ImageGrid {
        &self.tau
    }

    pub fn lambda(&self) -> &ImageGrid {
        &self.lambda
    }

    pub fn gradient_field(&self) -> &GradientField {
        &self.grad
    }

    /// Mean of `|d_i - x * grad_i|` over pixels and both directions.
    pub fn gradient_residual(&self) -> f64 {
        let g = &self.grad;
        let sum: f64 = g
            .d_h
            .data()
            .iter()
            .zip(self.x_h.data())
            .chain(g.d_v.data().iter().zip(self.x_v.data()))
            .map(|(d, x)| (d - x).abs())
            .sum();
        sum / (2 * self.x.len()) as f64
    }

    /// Mean of `|tau - x_k|`.
    pub fn constraint_residual(&self) -> f64 {
        self.tau
            .data()
            .iter()
            .zip(self.x_k.data())
            .map(|(t, xk)| (t - xk).abs())
            .sum::<f64>()
            / self.tau.len() as f64
    }

    fn coupling_active(&self, iter: usize) -> bool {
        self.coupling.as_ref().is_some_and(|c| iter > c.warmup)
    }

    /// One pass of the d, x, tau, lambda, lambda_i updates. Returns whether the
    /// stopping rule fired.
    pub fn step(&mut self) -> Result<bool> {
        let iter = self.iter + 1;
        let (bn, beta) = (self.beta_nabla, self.beta);

        let mut d_h = std::mem::replace(&mut self.grad.d_h, ImageGrid::zeros(1, 1));
        let mut d_v = std::mem::replace(&mut self.grad.d_v, ImageGrid::zeros(1, 1));
        shrink_into(
            &self.x_h,
            &self.x_v,
            &self.grad.lam_h,
            &self.grad.lam_v,
            self.kappa,
            bn,
            &mut d_h,
            &mut d_v,
        );
        self.grad.d_h = d_h;
        self.grad.d_v = d_v;

        let dt_h = self.grad.d_h.zip_map(&self.grad.lam_h, |d, l| d - l / bn);
        let dt_v = self.grad.d_v.zip_map(&self.grad.lam_v, |d, l| d - l / bn);
        let tau_t = self.tau.zip_map(&self.lambda, |t, l| t - l / beta);
        let upd = self.system.solve(&dt_h, &dt_v, &tau_t);

        if self.coupling_active(iter) {
            let c = self.coupling.as_ref().expect("coupling active");
            let xk = upd.x_k.data();
            for (i, (t, l)) in self
                .tau
                .data_mut()
                .iter_mut()
                .zip(self.lambda.data_mut())
                .enumerate()
            {
                *t = c.fidelity.prox(i, xk[i], *l, beta);
                *l = lambda_update(*l, c.gamma.data()[i], beta, *t, xk[i]);
            }
        }

        let step = GAMMA_MAX * bn;
        for (l, (d, x)) in self
            .grad
            .lam_h
            .data_mut()
            .iter_mut()
            .zip(self.grad.d_h.data().iter().zip(upd.x_h.data()))
        {
            *l -= step * (d - x);
        }
        for (l, (d, x)) in self
            .grad
            .lam_v
            .data_mut()
            .iter_mut()
            .zip(self.grad.d_v.data().iter().zip(upd.x_v.data()))
        {
            *l -= step * (d - x);
        }

        if !upd.x.is_finite() || !self.tau.is_finite() || !self.lambda.is_finite() {
            return Err(PgqError::NonFinite {
                iter,
                what: "ADM-TV iterate".into(),
            });
        }

        self.last_rel_change = relative_change(&upd.x, &self.x).unwrap_or(f64::INFINITY);
        let may_stop = self.coupling.as_ref().is_none_or(|c| iter > c.warmup);
        self.converged = may_stop && stopping_check(&upd.x, &self.x, self.epsilon);
        self.x = upd.x;
        self.x_k = upd.x_k;
        self.x_h = upd.x_h;
        self.x_v = upd.x_v;
        self.iter = iter;
        debug!(
            "adm-tv iter {iter}: rel change {:.3e}{}",
            self.last_rel_change,
            if self.coupling.is_some() {
                format!(", residual {:.3e}", self.constraint_residual())
            } else {
                String::new()
            }
        );
        Ok(self.converged)
    }

    pub fn run(mut self) -> Result<Restoration> {
        while self.iter < self.max_iters {
            if self.step()? {
                break;
            }
        }
        Ok(Restoration {
            iterations: self.iter,
            converged: self.converged,
            image: self.x,
        })
    }
}

/// ADM-TV restoration of `y` under AWGN with standard deviation `sigma`.
///
/// When `max_iters` is reached first the last iterate is returned with
/// `converged == false`.
pub fn awgn_solve(y: &ImageGrid, k: &Kernel, sigma: f64, p: &AdmTvParams) -> Result<Restoration> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(PgqError::Config(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    awgn_solve_beta(y, k, 1.0 / (sigma * sigma), p)
}

/// [`awgn_solve`] parameterized by the quadratic weight `1 / sigma^2` directly.
pub fn awgn_solve_beta(
    y: &ImageGrid,
    k: &Kernel,
    beta: f64,
    p: &AdmTvParams,
) -> Result<Restoration> {
    AdmTvSolver::awgn(y, k, beta, p)?.run()
}

/// Fused ADM-TV restoration under the Poisson-Gaussian-quantization model.
pub fn joint_solve(
    y: &ImageGrid,
    k: &Kernel,
    params: &NoiseParams,
    p: &AdmTvParams,
    cfg: &SolverConfig,
) -> Result<Restoration> {
    AdmTvSolver::joint(y, k, params, p, cfg)?.run()
}

/// ADM-TV as a black-box [`BaselineEstimator`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TvBaseline {
    pub params: AdmTvParams,
}

impl TvBaseline {
    pub fn new(params: AdmTvParams) -> Self {
        Self { params }
    }
}

impl BaselineEstimator for TvBaseline {
    fn solve(&self, y: &ImageGrid, k: &Kernel, sigma: f64) -> Result<ImageGrid> {
        let out = awgn_solve(y, k, sigma, &self.params)?;
        if !out.converged {
            warn!(
                "ADM-TV baseline stopped at its iteration cap ({}) before converging",
                out.iterations
            );
        }
        Ok(out.image)
    }

    fn name(&self) -> &str {
        "adm-tv"
    }
}
