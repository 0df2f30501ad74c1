//! Benchmark harness: corrupt test images, run the restoration methods over
//! several noise seeds and tabulate mean PSNR.

mod catalog;
mod external;
mod spec;
mod table;

use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use crate::admtv::{awgn_solve_beta, joint_solve, AdmTvParams, TvBaseline};
use crate::error::{PgqError, Result};
use crate::grid::ImageGrid;
use crate::kernel::Kernel;
use crate::metrics::psnr;
use crate::noise::{corrupt, NoiseParams};
use crate::solver::{beta_from_noise, restore, Restoration, SolverConfig};

pub use catalog::{sha256_hex, ImageCatalog};
pub use external::ExternalBaseline;
pub use spec::{
    default_seeds, parse_cell, peak_scaled_denoise_spec, table_cells, table_tv_params,
    ExperimentSpec, KernelSpec, Method, NoiseSpec, GAMMA_SRGB, Q_8BIT, TABLE1_IMAGES, TABLE1_RADII,
    TABLE2_LEVELS,
};
pub use table::{emit_table, format_sig, TableFormat, CSV_COLUMNS};

/// Aggregate over the successful seeds of one method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub seed_count: usize,
    pub psnr_mean_db: f64,
    pub psnr_std_db: f64,
    pub iters_mean: f64,
    pub wall_s: f64,
}

/// One line of a result table. `stats` is `None` when the method was skipped
/// or failed on every seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodStats {
    /// `"input"` for the corrupted observation, otherwise a [`Method`] name.
    pub method: String,
    pub stats: Option<Stats>,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedFailure {
    pub seed: u64,
    pub method: Method,
    pub message: String,
}

/// Results of one [`ExperimentSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub image: String,
    pub kernel: KernelSpec,
    pub noise: NoiseParams,
    pub input: MethodStats,
    pub methods: Vec<MethodStats>,
    pub failures: Vec<SeedFailure>,
}

impl ResultRow {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn method(&self, m: Method) -> Option<&Stats> {
        self.methods
            .iter()
            .find(|s| s.method == m.name())
            .and_then(|s| s.stats.as_ref())
    }

    /// Input line followed by one line per method.
    pub fn lines(&self) -> impl Iterator<Item = &MethodStats> {
        std::iter::once(&self.input).chain(self.methods.iter())
    }

    /// Copy with every wall time set to zero, for byte-level comparisons.
    pub fn without_timing(&self) -> Self {
        let mut row = self.clone();
        for m in std::iter::once(&mut row.input).chain(row.methods.iter_mut()) {
            if let Some(s) = m.stats.as_mut() {
                s.wall_s = 0.0;
            }
        }
        row
    }
}

/// Worker count: `$PGQ_THREADS` if set to a positive integer, otherwise the
/// available parallelism.
pub fn worker_threads() -> usize {
    std::env::var("PGQ_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    psnr: f64,
    iters: f64,
    wall: f64,
}

enum Outcome {
    Done(Sample),
    Skipped,
    Failed(String),
}

struct SeedResult {
    input: Sample,
    methods: Vec<Outcome>,
}

struct Prepared<'a> {
    spec: &'a ExperimentSpec,
    clean: ImageGrid,
    kernel: Kernel,
    params: NoiseParams,
    external: Option<ExternalBaseline>,
}

fn prepare<'a>(spec: &'a ExperimentSpec, catalog: &ImageCatalog) -> Result<Prepared<'a>> {
    spec.validate()?;
    let clean = catalog.load(&spec.image_id)?;
    let kernel = spec.kernel.build()?;
    let params = spec.noise.params()?;
    let external = match &spec.external_baseline_cmd {
        Some(cmd) => Some(ExternalBaseline::new(cmd)?),
        None => None,
    };
    Ok(Prepared {
        spec,
        clean,
        kernel,
        params,
        external,
    })
}

/// Runs one method on an observation.
pub fn run_method(
    method: Method,
    y: &ImageGrid,
    k: &Kernel,
    params: &NoiseParams,
    spec: &ExperimentSpec,
) -> Result<Restoration> {
    match method {
        Method::AwgnTv => {
            let beta = beta_from_noise(y, params, 1.0)?;
            awgn_solve_beta(y, k, beta, &spec.tv)
        }
        Method::PropTv => joint_solve(y, k, params, &spec.tv, &spec.solver),
        Method::PropExternal => {
            let cmd = spec
                .external_baseline_cmd
                .as_deref()
                .ok_or_else(|| PgqError::Config("external_baseline_cmd is not set".into()))?;
            restore(y, k, params, ExternalBaseline::new(cmd)?, &spec.solver)
        }
    }
}

/// Inner ADM-TV settings when it runs as an opaque baseline: at most 100
/// iterations per call and a stopping threshold ten times tighter than the
/// outer one, since every call restarts from zero.
pub fn black_box_tv_params(tv: &AdmTvParams, solver: &SolverConfig) -> AdmTvParams {
    AdmTvParams {
        max_iters: 100,
        epsilon: 0.1 * solver.epsilon,
        ..*tv
    }
}

/// Same as [`run_method`] for prop-tv but through the generic splitting loop
/// with ADM-TV as an opaque baseline.
pub fn run_generic_tv(
    y: &ImageGrid,
    k: &Kernel,
    params: &NoiseParams,
    spec: &ExperimentSpec,
) -> Result<Restoration> {
    let inner = black_box_tv_params(&spec.tv, &spec.solver);
    restore(y, k, params, TvBaseline::new(inner), &spec.solver)
}

fn run_seed(p: &Prepared<'_>, seed: u64) -> Result<SeedResult> {
    let y = corrupt(&p.clean, &p.kernel, &p.params, seed)?;
    let input = Sample {
        psnr: psnr(&y, &p.clean, 1.0)?,
        iters: 0.0,
        wall: 0.0,
    };
    let mut methods = Vec::with_capacity(p.spec.methods.len());
    for &m in &p.spec.methods {
        if m == Method::PropExternal && p.external.is_none() {
            methods.push(Outcome::Skipped);
            continue;
        }
        let t0 = Instant::now();
        let outcome = run_method(m, &y, &p.kernel, &p.params, p.spec).and_then(|r| {
            let wall = t0.elapsed().as_secs_f64();
            let v = psnr(&r.image, &p.clean, 1.0)?;
            if !v.is_finite() {
                return Err(PgqError::NonFinite {
                    iter: r.iterations,
                    what: "psnr".into(),
                });
            }
            Ok(Sample {
                psnr: v,
                iters: r.iterations as f64,
                wall,
            })
        });
        methods.push(match outcome {
            Ok(s) => Outcome::Done(s),
            Err(e) => {
                warn!("{} seed {seed} {m}: {e}", p.spec.cell_name());
                Outcome::Failed(e.to_string())
            }
        });
    }
    Ok(SeedResult { input, methods })
}

fn aggregate(samples: &[Sample]) -> Option<Stats> {
    if samples.is_empty() {
        return None;
    }
    let n = samples.len() as f64;
    let mean = |f: fn(&Sample) -> f64| samples.iter().map(f).sum::<f64>() / n;
    let psnr_mean = mean(|s| s.psnr);
    let var = if samples.len() > 1 {
        samples
            .iter()
            .map(|s| (s.psnr - psnr_mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    Some(Stats {
        seed_count: samples.len(),
        psnr_mean_db: psnr_mean,
        psnr_std_db: var.sqrt(),
        iters_mean: mean(|s| s.iters),
        wall_s: mean(|s| s.wall),
    })
}

fn assemble(p: &Prepared<'_>, seeds: Vec<SeedResult>) -> ResultRow {
    let spec = p.spec;
    let inputs: Vec<Sample> = seeds.iter().map(|s| s.input).collect();
    let mut failures = Vec::new();
    let mut methods = Vec::with_capacity(spec.methods.len());
    for (j, &m) in spec.methods.iter().enumerate() {
        let mut done = Vec::new();
        let mut skipped = false;
        for (seed, r) in spec.seeds.iter().zip(&seeds) {
            match &r.methods[j] {
                Outcome::Done(s) => done.push(*s),
                Outcome::Skipped => skipped = true,
                Outcome::Failed(msg) => failures.push(SeedFailure {
                    seed: *seed,
                    method: m,
                    message: msg.clone(),
                }),
            }
        }
        methods.push(MethodStats {
            method: m.name().to_string(),
            stats: aggregate(&done),
            skipped,
        });
    }
    ResultRow {
        image: spec.image_id.clone(),
        kernel: spec.kernel.clone(),
        noise: p.params,
        input: MethodStats {
            method: "input".into(),
            stats: aggregate(&inputs),
            skipped: false,
        },
        methods,
        failures,
    }
}

/// Runs every cell over its seeds with at most `threads` workers.
///
/// All specs are validated and their images loaded before any work starts.
/// Rows come back in spec order; per-seed solver failures are recorded in
/// [`ResultRow::failures`] rather than aborting the batch.
pub fn run_experiments(
    specs: &[ExperimentSpec],
    catalog: &ImageCatalog,
    threads: usize,
) -> Result<Vec<ResultRow>> {
    let prepared = specs
        .iter()
        .map(|s| prepare(s, catalog))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = prepared
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.spec.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| PgqError::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<SeedResult>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, seed)| run_seed(&prepared[i], seed))
            .collect()
    });
    let mut results = results.into_iter();
    let mut rows = Vec::with_capacity(prepared.len());
    for p in &prepared {
        let seeds = results
            .by_ref()
            .take(p.spec.seeds.len())
            .collect::<Result<Vec<_>>>()?;
        let row = assemble(p, seeds);
        info!(
            "{} done ({} failures)",
            p.spec.cell_name(),
            row.failures.len()
        );
        rows.push(row);
    }
    Ok(rows)
}

/// Runs a single cell using [`worker_threads`] workers.
pub fn run_experiment(spec: &ExperimentSpec, catalog: &ImageCatalog) -> Result<ResultRow> {
    let mut rows = run_experiments(std::slice::from_ref(spec), catalog, worker_threads())?;
    Ok(rows.remove(0))
}
