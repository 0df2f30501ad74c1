use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::admtv::AdmTvParams;
use crate::error::{PgqError, Result};
use crate::io::read_image;
use crate::kernel::Kernel;
use crate::noise::NoiseParams;
use crate::solver::SolverConfig;

/// Quantization step of 8-bit data.
pub const Q_8BIT: f64 = 1.0 / 256.0;
/// sRGB-like gamma used for the quantized configurations.
pub const GAMMA_SRGB: f64 = 2.2;

/// Kernel micro-grammar: `identity`, `pillbox:<radius>`, `file:<path.pfm>`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Identity,
    Pillbox(f64),
    File(PathBuf),
}

impl KernelSpec {
    pub fn build(&self) -> Result<Kernel> {
        match self {
            KernelSpec::Identity => Ok(Kernel::identity()),
            KernelSpec::Pillbox(r) => Kernel::pillbox(*r),
            KernelSpec::File(path) => Kernel::from_grid(&read_image(path)?),
        }
    }

    /// Radius column of the result tables; 0 for the identity.
    pub fn radius(&self) -> f64 {
        match self {
            KernelSpec::Pillbox(r) => *r,
            _ => 0.0,
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Identity => write!(f, "identity"),
            KernelSpec::Pillbox(r) => write!(f, "pillbox:{r}"),
            KernelSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = PgqError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "identity" {
            return Ok(KernelSpec::Identity);
        }
        if let Some(r) = s.strip_prefix("pillbox:") {
            let r: f64 = r
                .parse()
                .map_err(|_| PgqError::Config(format!("bad pill-box radius in {s:?}")))?;
            if !(r >= 0.5) {
                return Err(PgqError::Config(format!(
                    "pill-box radius must be >= 0.5 in {s:?}"
                )));
            }
            return Ok(KernelSpec::Pillbox(r));
        }
        if let Some(p) = s.strip_prefix("file:") {
            if p.is_empty() {
                return Err(PgqError::Config("empty kernel file path".into()));
            }
            return Ok(KernelSpec::File(PathBuf::from(p)));
        }
        Err(PgqError::Config(format!(
            "unknown kernel spec {s:?} (expected identity, pillbox:<r> or file:<path>)"
        )))
    }
}

/// Noise description of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Model(NoiseParams),
    /// Denoising convention: the clean image is scaled to `peak`, Poisson
    /// counts are drawn, then Gaussian noise of std `sigma` (count units) added.
    PeakScaled {
        peak: f64,
        sigma: f64,
    },
}

impl NoiseSpec {
    /// Equivalent model on `[0, 1]` intensities: `alpha = peak`, Gaussian std
    /// `sigma / peak`, no quantization.
    pub fn params(&self) -> Result<NoiseParams> {
        match *self {
            NoiseSpec::Model(p) => {
                p.validate()?;
                Ok(p)
            }
            NoiseSpec::PeakScaled { peak, sigma } => {
                if !(peak > 0.0) {
                    return Err(PgqError::Config(format!(
                        "peak must be positive, got {peak}"
                    )));
                }
                NoiseParams::new(peak, sigma / peak, 0.0, 1.0)
            }
        }
    }
}

/// Restoration methods compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// ADM-TV with the mean noise variance as its Gaussian variance.
    AwgnTv,
    /// Fused ADM-TV with the Poisson-Gaussian-quantization likelihood.
    PropTv,
    /// Generic splitting loop around an external AWGN executable.
    PropExternal,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::AwgnTv, Method::PropTv, Method::PropExternal];

    pub fn name(self) -> &'static str {
        match self {
            Method::AwgnTv => "awgn-tv",
            Method::PropTv => "prop-tv",
            Method::PropExternal => "prop-external",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PgqError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| PgqError::Config(format!("unknown method {s:?}")))
    }
}

/// One benchmark cell: an image, a blur, a noise level and the methods to run
/// over a list of noise seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub image_id: String,
    pub kernel: KernelSpec,
    pub noise: NoiseSpec,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub solver: SolverConfig,
    /// TV parameters for both the standalone and the fused solver.
    pub tv: AdmTvParams,
    /// Command for [`Method::PropExternal`]; the method is skipped without it.
    pub external_baseline_cmd: Option<String>,
}

/// Default seeds `1..=10`.
pub fn default_seeds() -> Vec<u64> {
    (1..=10).collect()
}

/// TV settings of the deconvolution experiments. The standalone AWGN solver
/// runs with a generous cap since it stops on its own tolerance.
pub fn table_tv_params(epsilon: f64) -> AdmTvParams {
    AdmTvParams {
        epsilon,
        max_iters: 1000,
        ..AdmTvParams::default()
    }
}

impl ExperimentSpec {
    /// Deconvolution cell with the standard settings.
    pub fn deconvolution(image_id: &str, radius: f64, params: NoiseParams) -> Self {
        let solver = SolverConfig::deconvolution();
        Self {
            image_id: image_id.to_string(),
            kernel: KernelSpec::Pillbox(radius),
            noise: NoiseSpec::Model(params),
            methods: vec![Method::AwgnTv, Method::PropTv],
            seeds: default_seeds(),
            tv: table_tv_params(solver.epsilon),
            solver,
            external_baseline_cmd: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(PgqError::Config(
                "experiment needs at least one seed".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(PgqError::Config(
                "experiment needs at least one method".into(),
            ));
        }
        self.noise.params()?;
        self.solver.validate()?;
        self.tv.validate()?;
        Ok(())
    }

    /// Canonical cell name, e.g. `cameraman,r9,a1024,s0.0001` or
    /// `cameraman,peak10,s1`.
    pub fn cell_name(&self) -> String {
        let kernel = match &self.kernel {
            KernelSpec::Identity => "delta".to_string(),
            KernelSpec::Pillbox(r) => format!("r{r}"),
            KernelSpec::File(p) => format!("file:{}", p.display()),
        };
        match self.noise {
            NoiseSpec::PeakScaled { peak, sigma } => {
                format!("{},peak{peak},s{sigma}", self.image_id)
            }
            NoiseSpec::Model(p) => {
                let mut s = format!("{},{kernel},a{},s{}", self.image_id, p.alpha, p.sigma);
                if p.is_quantized() {
                    s.push_str(",q");
                }
                s
            }
        }
    }
}

/// Peak-scaled denoising cell (identity kernel, denoising solver settings).
pub fn peak_scaled_denoise_spec(image_id: &str, peak: f64, sigma: f64) -> Result<ExperimentSpec> {
    if !(peak > 0.0) {
        return Err(PgqError::Config(format!(
            "peak must be positive, got {peak}"
        )));
    }
    let solver = SolverConfig::denoising();
    Ok(ExperimentSpec {
        image_id: image_id.to_string(),
        kernel: KernelSpec::Identity,
        noise: NoiseSpec::PeakScaled { peak, sigma },
        methods: vec![Method::AwgnTv, Method::PropTv],
        seeds: default_seeds(),
        tv: table_tv_params(solver.epsilon),
        solver,
        external_baseline_cmd: None,
    })
}

fn parse_num(tok: &str, prefix: &str, cell: &str) -> Result<f64> {
    tok.strip_prefix(prefix)
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or_else(|| PgqError::Config(format!("bad field {tok:?} in cell {cell:?}")))
}

/// Parses a cell name.
///
/// Deconvolution: `<image>,r<radius>|delta,a<alpha>,s<sigma>[,q]`, where `q`
/// adds 8-bit quantization after gamma 2.2. Denoising:
/// `<image>,peak<peak>,s<sigma>`.
pub fn parse_cell(cell: &str) -> Result<ExperimentSpec> {
    let parts: Vec<&str> = cell.split(',').map(str::trim).collect();
    let bad = || PgqError::Config(format!("invalid cell name {cell:?}"));
    let image = *parts.first().filter(|s| !s.is_empty()).ok_or_else(bad)?;
    if !image
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(bad());
    }
    match parts.len() {
        3 if parts[1].starts_with("peak") => {
            let peak = parse_num(parts[1], "peak", cell)?;
            let sigma = parse_num(parts[2], "s", cell)?;
            peak_scaled_denoise_spec(image, peak, sigma)
        }
        4 | 5 => {
            let kernel = if parts[1] == "delta" {
                KernelSpec::Identity
            } else {
                KernelSpec::Pillbox(parse_num(parts[1], "r", cell)?)
            };
            let alpha = parse_num(parts[2], "a", cell)?;
            let sigma = parse_num(parts[3], "s", cell)?;
            let (q, g) = match parts.get(4) {
                None => (0.0, 1.0),
                Some(&"q") => (Q_8BIT, GAMMA_SRGB),
                Some(_) => return Err(bad()),
            };
            let params = NoiseParams::new(alpha, sigma, q, g)?;
            let mut spec = ExperimentSpec::deconvolution(image, 1.0, params);
            spec.kernel = kernel;
            if let KernelSpec::Pillbox(r) = spec.kernel {
                if !(r >= 0.5) {
                    return Err(bad());
                }
            }
            spec.validate()?;
            Ok(spec)
        }
        _ => Err(bad()),
    }
}

/// Images and radii of the deconvolution table.
pub const TABLE1_IMAGES: [&str; 3] = ["cameraman", "lena", "boats"];
pub const TABLE1_RADII: [f64; 4] = [5.0, 7.0, 9.0, 11.0];
/// Peak / sigma pairs of the denoising table.
pub const TABLE2_LEVELS: [(f64, f64); 8] = [
    (1.0, 0.1),
    (2.0, 0.2),
    (5.0, 0.5),
    (10.0, 1.0),
    (20.0, 2.0),
    (30.0, 3.0),
    (60.0, 6.0),
    (120.0, 12.0),
];

/// Expands a named table block into its cells.
///
/// * `t1-alpha<A>`: deconvolution block at `alpha = A`, `sigma = 1e-4`.
/// * `t1-a<A>-s<S>[-q]`: deconvolution block at any noise level.
/// * `t2-<image>`: the eight denoising levels for one image.
pub fn table_cells(table: &str) -> Result<Vec<ExperimentSpec>> {
    let bad = || PgqError::Config(format!("unknown table {table:?}"));
    if let Some(image) = table.strip_prefix("t2-") {
        if image.is_empty() {
            return Err(bad());
        }
        return TABLE2_LEVELS
            .iter()
            .map(|&(peak, sigma)| peak_scaled_denoise_spec(image, peak, sigma))
            .collect();
    }
    let (alpha, sigma, quant) = if let Some(a) = table.strip_prefix("t1-alpha") {
        (a.parse::<f64>().map_err(|_| bad())?, 1e-4, false)
    } else if let Some(rest) = table.strip_prefix("t1-a") {
        let fields: Vec<&str> = rest.split('-').collect();
        let alpha = fields
            .first()
            .and_then(|v| v.parse().ok())
            .ok_or_else(bad)?;
        let sigma = fields
            .get(1)
            .and_then(|v| v.strip_prefix('s'))
            .and_then(|v| v.parse().ok())
            .ok_or_else(bad)?;
        let quant = match fields.get(2) {
            None => false,
            Some(&"q") => true,
            Some(_) => return Err(bad()),
        };
        if fields.len() > 3 {
            return Err(bad());
        }
        (alpha, sigma, quant)
    } else {
        return Err(bad());
    };
    let params = if quant {
        NoiseParams::new(alpha, sigma, Q_8BIT, GAMMA_SRGB)?
    } else {
        NoiseParams::poisson_gaussian(alpha, sigma)?
    };
    Ok(TABLE1_IMAGES
        .iter()
        .flat_map(|img| {
            TABLE1_RADII
                .iter()
                .map(move |&r| ExperimentSpec::deconvolution(img, r, params))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_grammar() {
        assert_eq!(
            "identity".parse::<KernelSpec>().unwrap(),
            KernelSpec::Identity
        );
        assert_eq!(
            "pillbox:9".parse::<KernelSpec>().unwrap(),
            KernelSpec::Pillbox(9.0)
        );
        assert_eq!(
            "file:k.pfm".parse::<KernelSpec>().unwrap(),
            KernelSpec::File("k.pfm".into())
        );
        for bad in ["pillbox:", "pillbox:0.2", "gauss:2", "file:"] {
            assert!(bad.parse::<KernelSpec>().is_err(), "{bad}");
        }
        let k = KernelSpec::Pillbox(2.5);
        assert_eq!(k.to_string().parse::<KernelSpec>().unwrap(), k);
    }

    #[test]
    fn peak_scaled_units() {
        let spec = peak_scaled_denoise_spec("cameraman", 120.0, 12.0).unwrap();
        let p = spec.noise.params().unwrap();
        assert_eq!(p.alpha, 120.0);
        assert!((p.sigma - 0.1).abs() < 1e-15);
        assert_eq!((p.q, p.g), (0.0, 1.0));
        assert_eq!(spec.kernel, KernelSpec::Identity);
        assert_eq!(spec.solver.beta0, 2.0);
        assert!(peak_scaled_denoise_spec("cameraman", 0.0, 1.0).is_err());
    }

    #[test]
    fn cell_names_round_trip() {
        for name in [
            "cameraman,r9,a1024,s0.0001",
            "lena,r5,a16,s0.0001",
            "cameraman,r5,a1024,s0.1,q",
            "cameraman,peak10,s1",
            "boats,delta,a64,s0.1",
        ] {
            let spec = parse_cell(name).unwrap();
            assert_eq!(spec.cell_name(), name);
        }
        let spec = parse_cell("cameraman,r9,a1024,s1e-4").unwrap();
        assert_eq!(spec.kernel, KernelSpec::Pillbox(9.0));
        assert_eq!(spec.noise.params().unwrap().sigma, 1e-4);
        for bad in [
            "",
            "cameraman",
            "cameraman,r9,a1024",
            "cameraman,x9,a1,s1",
            "cam era,r5,a1,s1",
        ] {
            assert!(parse_cell(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn table_blocks() {
        let cells = table_cells("t1-alpha1024").unwrap();
        assert_eq!(cells.len(), 12);
        assert_eq!(cells[2].cell_name(), "cameraman,r9,a1024,s0.0001");
        let q = table_cells("t1-a256-s0.1-q").unwrap();
        assert!(q.iter().all(|c| c.noise.params().unwrap().is_quantized()));
        assert_eq!(table_cells("t2-cameraman").unwrap().len(), 8);
        assert!(table_cells("t3").is_err());
        assert!(table_cells("t1-a256-s0.1-x").is_err());
    }
}
