//! Flat `key = value` configuration.
//!
//! Values are layered: built-in defaults, then the config file, then command
//! line flags. The defaults for `beta0` and `epsilon` depend on `mode`, which
//! is resolved from the layers first.

use std::fmt::Write as _;
use std::path::PathBuf;

use pgq_core::admtv::AdmTvParams;
use pgq_core::harness::{
    default_seeds, table_tv_params, ExperimentSpec, KernelSpec, Method, NoiseSpec,
};
use pgq_core::{NoiseParams, PgqError, Result, SolverBoundary, SolverConfig};

/// Every accepted key, in the order `emit` writes them.
pub const KEYS: [&str; 23] = [
    "mode",
    "kernel",
    "alpha",
    "sigma",
    "q",
    "g",
    "seed",
    "seeds",
    "methods",
    "beta0",
    "epsilon",
    "max_iters",
    "gamma_lo_frac",
    "gamma_hi_frac",
    "warmup_iters",
    "boundary",
    "kappa",
    "beta_nabla",
    "tv_epsilon",
    "tv_max_iters",
    "awgn_sigma",
    "external_baseline_cmd",
    "data_dir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Deconvolution,
    Denoising,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Deconvolution => "deconvolution",
            Mode::Denoising => "denoising",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub mode: Mode,
    pub kernel: Option<KernelSpec>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub q: f64,
    pub g: f64,
    pub seed: u64,
    pub seeds: Vec<u64>,
    /// Methods run by `bench`.
    pub methods: Vec<Method>,
    pub solver: SolverConfig,
    pub tv: AdmTvParams,
    pub awgn_sigma: Option<f64>,
    pub external_baseline_cmd: Option<String>,
    pub data_dir: Option<PathBuf>,
}

fn bad(key: &str, value: &str, why: &str) -> PgqError {
    PgqError::Config(format!("invalid value {value:?} for {key}: {why}"))
}

fn num(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad(key, value, "expected a finite number"))
}

fn int(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| bad(key, value, "expected a nonnegative integer"))
}

/// Seed list: `a..b` (inclusive) or a comma-separated list.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let err = || bad("seeds", value, "expected `a..b` or a comma-separated list");
    let seeds: Vec<u64> = if let Some((a, b)) = value.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| err())?,
            b.trim().parse().map_err(|_| err())?,
        );
        (a..=b).collect()
    } else {
        value
            .split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|_| err()))
            .collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(err());
    }
    Ok(seeds)
}

fn format_seeds(seeds: &[u64]) -> String {
    let contiguous = seeds.windows(2).all(|w| w[1] == w[0] + 1);
    if contiguous && seeds.len() > 1 {
        format!("{}..{}", seeds[0], seeds[seeds.len() - 1])
    } else {
        seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Parses `key = value` lines; `#` starts a comment. Unknown keys are errors.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            PgqError::Config(format!(
                "line {}: expected `key = value`, got {raw:?}",
                n + 1
            ))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(PgqError::Config(format!(
                "line {}: unknown key {k:?}",
                n + 1
            )));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

impl CliConfig {
    pub fn defaults(mode: Mode) -> Self {
        let solver = match mode {
            Mode::Deconvolution => SolverConfig::deconvolution(),
            Mode::Denoising => SolverConfig::denoising(),
        };
        Self {
            mode,
            kernel: None,
            alpha: None,
            sigma: None,
            q: 0.0,
            g: 1.0,
            seed: 1,
            seeds: default_seeds(),
            methods: vec![Method::AwgnTv, Method::PropTv],
            tv: table_tv_params(solver.epsilon),
            solver,
            awgn_sigma: None,
            external_baseline_cmd: None,
            data_dir: None,
        }
    }

    /// Builds a config from layered entries, later entries winning.
    pub fn from_entries(entries: &[(String, String)]) -> Result<Self> {
        let mut mode = None;
        let mut kernel = None;
        for (k, v) in entries {
            match k.as_str() {
                "mode" => mode = Some(v.as_str()),
                "kernel" => kernel = Some(v.parse::<KernelSpec>()?),
                _ => {}
            }
        }
        let mode = match mode {
            Some("deconvolution") => Mode::Deconvolution,
            Some("denoising") => Mode::Denoising,
            Some(other) => return Err(bad("mode", other, "expected deconvolution or denoising")),
            None if kernel == Some(KernelSpec::Identity) => Mode::Denoising,
            None => Mode::Deconvolution,
        };
        let mut cfg = Self::defaults(mode);
        for (k, v) in entries {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "mode" => {}
            "kernel" => self.kernel = Some(v.parse()?),
            "alpha" => self.alpha = Some(num(key, v)?),
            "sigma" => self.sigma = Some(num(key, v)?),
            "q" => self.q = num(key, v)?,
            "g" => self.g = num(key, v)?,
            "seed" => self.seed = v.parse().map_err(|_| bad(key, v, "expected an integer"))?,
            "seeds" => self.seeds = parse_seeds(v)?,
            "methods" => {
                self.methods = v
                    .split(',')
                    .map(|m| m.trim().parse())
                    .collect::<Result<_>>()?;
                if self.methods.is_empty() {
                    return Err(bad(key, v, "expected at least one method"));
                }
            }
            "beta0" => self.solver.beta0 = num(key, v)?,
            "epsilon" => self.solver.epsilon = num(key, v)?,
            "max_iters" => self.solver.max_iters = int(key, v)?,
            "gamma_lo_frac" => self.solver.gamma_lo_frac = num(key, v)?,
            "gamma_hi_frac" => self.solver.gamma_hi_frac = num(key, v)?,
            "warmup_iters" => self.solver.warmup_iters = int(key, v)?,
            "boundary" => {
                let b = match v {
                    "extended" => SolverBoundary::Extended,
                    "periodic" => SolverBoundary::Periodic,
                    _ => return Err(bad(key, v, "expected extended or periodic")),
                };
                self.solver.boundary = b;
                self.tv.boundary = b;
            }
            "kappa" => self.tv.kappa = num(key, v)?,
            "beta_nabla" => self.tv.beta_nabla = num(key, v)?,
            "tv_epsilon" => self.tv.epsilon = num(key, v)?,
            "tv_max_iters" => self.tv.max_iters = int(key, v)?,
            "awgn_sigma" => self.awgn_sigma = Some(num(key, v)?),
            "external_baseline_cmd" => {
                self.external_baseline_cmd = Some(v.to_string()).filter(|s| !s.is_empty())
            }
            "data_dir" => self.data_dir = Some(PathBuf::from(v)),
            _ => return Err(PgqError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.tv.validate()?;
        if let Some(s) = self.awgn_sigma {
            if !(s > 0.0) {
                return Err(bad("awgn_sigma", &s.to_string(), "must be positive"));
            }
        }
        // alpha may be supplied later; check the rest of the model now
        NoiseParams::new(
            self.alpha.unwrap_or(1.0),
            self.sigma.unwrap_or(0.0),
            self.q,
            self.g,
        )?;
        Ok(())
    }

    /// Noise model; `alpha` is required, `sigma` defaults to 0.
    pub fn noise(&self) -> Result<NoiseParams> {
        let alpha = self.alpha.ok_or_else(|| {
            PgqError::Config("alpha is required (flag --alpha or config key)".into())
        })?;
        NoiseParams::new(alpha, self.sigma.unwrap_or(0.0), self.q, self.g)
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        self.kernel.clone().ok_or_else(|| {
            PgqError::Config("a kernel is required (identity, pillbox:<r> or file:<path>)".into())
        })
    }

    /// Experiment description with this config's solver settings.
    pub fn spec(&self, image_id: &str, methods: Vec<Method>) -> Result<ExperimentSpec> {
        Ok(ExperimentSpec {
            image_id: image_id.to_string(),
            kernel: self.kernel_spec()?,
            noise: NoiseSpec::Model(self.noise()?),
            methods,
            seeds: self.seeds.clone(),
            solver: self.solver,
            tv: self.tv,
            external_baseline_cmd: self.external_baseline_cmd.clone(),
        })
    }

    /// Applies this config's solver, TV and external settings to a preset cell.
    pub fn override_spec(&self, spec: &mut ExperimentSpec, explicit: &[(String, String)]) {
        let has = |k: &str| explicit.iter().any(|(key, _)| key == k);
        let solver_keys = [
            "beta0",
            "epsilon",
            "max_iters",
            "gamma_lo_frac",
            "gamma_hi_frac",
            "warmup_iters",
            "boundary",
        ];
        let tv_keys = [
            "kappa",
            "beta_nabla",
            "tv_epsilon",
            "tv_max_iters",
            "boundary",
        ];
        if solver_keys.iter().any(|k| has(k)) {
            spec.solver = self.solver;
        }
        if tv_keys.iter().any(|k| has(k)) {
            spec.tv = self.tv;
        }
        if has("seeds") {
            spec.seeds = self.seeds.clone();
        }
        if has("methods") {
            spec.methods = self.methods.clone();
        }
        if self.external_baseline_cmd.is_some() {
            spec.external_baseline_cmd = self.external_baseline_cmd.clone();
        }
    }

    /// Serializes every set key; parsing the output yields the same config.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("mode", self.mode.name().into());
        if let Some(k) = &self.kernel {
            put("kernel", k.to_string());
        }
        if let Some(a) = self.alpha {
            put("alpha", a.to_string());
        }
        if let Some(s) = self.sigma {
            put("sigma", s.to_string());
        }
        put("q", self.q.to_string());
        put("g", self.g.to_string());
        put("seed", self.seed.to_string());
        put("seeds", format_seeds(&self.seeds));
        put(
            "methods",
            self.methods
                .iter()
                .map(|m| m.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        let s = &self.solver;
        put("beta0", s.beta0.to_string());
        put("epsilon", s.epsilon.to_string());
        put("max_iters", s.max_iters.to_string());
        put("gamma_lo_frac", s.gamma_lo_frac.to_string());
        put("gamma_hi_frac", s.gamma_hi_frac.to_string());
        put("warmup_iters", s.warmup_iters.to_string());
        put(
            "boundary",
            match s.boundary {
                SolverBoundary::Extended => "extended",
                SolverBoundary::Periodic => "periodic",
            }
            .into(),
        );
        let t = &self.tv;
        put("kappa", t.kappa.to_string());
        put("beta_nabla", t.beta_nabla.to_string());
        put("tv_epsilon", t.epsilon.to_string());
        put("tv_max_iters", t.max_iters.to_string());
        if let Some(s) = self.awgn_sigma {
            put("awgn_sigma", s.to_string());
        }
        if let Some(c) = &self.external_baseline_cmd {
            put("external_baseline_cmd", c.clone());
        }
        if let Some(d) = &self.data_dir {
            put("data_dir", d.display().to_string());
        }
        out
    }
}
