//! The `pgq` command-line tool.
//!
//! Subcommands: `corrupt`, `restore`, `psnr`, `bench` and `emit-config`.
//! Exit codes are 0 on success, 1 for usage and configuration errors, 2 for
//! I/O and file format errors, 3 for numerical failures and 4 when a bench run
//! completed with some failed seeds.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use pgq_core::admtv::awgn_solve_beta;
use pgq_core::harness::{
    emit_table, parse_cell, run_experiments, run_method, table_cells, worker_threads,
    ExperimentSpec, ImageCatalog, Method, ResultRow, TableFormat,
};
use pgq_core::{io, noise, psnr, PgqError};

use config::{parse_entries, CliConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "pgq",
    version,
    about = "Poisson-Gaussian-quantization image restoration"
)]
pub struct Cli {
    /// Log verbosity; repeat for more detail.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blur and corrupt a clean image, printing its PSNR against the input.
    Corrupt {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        opts: ModelOpts,
    },
    /// Restore an observation.
    Restore {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(short, long, value_enum, default_value = "prop-tv")]
        method: MethodArg,
        /// Clean image; when given, the PSNR of the result is printed.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        opts: ModelOpts,
    },
    /// PSNR in dB of an estimate against a reference.
    Psnr {
        estimate: PathBuf,
        reference: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        peak: f64,
    },
    /// Run benchmark cells and write a result table.
    Bench {
        /// Cell name such as `cameraman,r9,a1024,s1e-4`; repeatable.
        #[arg(long, conflicts_with_all = ["table", "spec"])]
        cell: Vec<String>,
        /// Preset table such as `t1-alpha1024` or `t2-cameraman`.
        #[arg(long, conflicts_with = "spec")]
        table: Option<String>,
        /// File with one cell name per line.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Write zero wall times so repeated runs are byte-identical.
        #[arg(long)]
        no_timing: bool,
        /// Directory holding the test images and SHA256SUMS.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[command(flatten)]
        opts: ModelOpts,
    },
    /// Print the effective configuration as `key = value` lines.
    EmitConfig {
        #[command(flatten)]
        opts: ModelOpts,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    AwgnTv,
    PropTv,
    PropExternal,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::AwgnTv => Method::AwgnTv,
            MethodArg::PropTv => Method::PropTv,
            MethodArg::PropExternal => Method::PropExternal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Markdown,
}

/// Flags shared by the subcommands that need a noise model or solver settings.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelOpts {
    /// `key = value` config file; flags override its values.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// `identity`, `pillbox:<radius>` or `file:<path.pfm>`.
    #[arg(short, long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub sigma: Option<String>,
    /// Quantization step on the gamma-encoded scale.
    #[arg(long)]
    pub q: Option<String>,
    /// Gamma exponent of the quantizer.
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// `a..b` or a comma-separated list.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Command for the external baseline.
    #[arg(long)]
    pub external_cmd: Option<String>,
    /// Any other config key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ModelOpts {
    /// Config file entries followed by the flag entries.
    pub fn entries(&self) -> pgq_core::Result<Vec<(String, String)>> {
        let mut out = match &self.config {
            Some(path) => parse_entries(&fs::read_to_string(path)?)?,
            None => Vec::new(),
        };
        let flags = [
            ("kernel", &self.kernel),
            ("alpha", &self.alpha),
            ("sigma", &self.sigma),
            ("q", &self.q),
            ("g", &self.g),
            ("seed", &self.seed),
            ("seeds", &self.seeds),
            ("external_baseline_cmd", &self.external_cmd),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                out.push((k.to_string(), v.clone()));
            }
        }
        for kv in &self.set {
            let line = kv.replacen('=', " = ", 1);
            if !kv.contains('=') {
                return Err(PgqError::Config(format!(
                    "--set expects KEY=VALUE, got {kv:?}"
                )));
            }
            out.extend(parse_entries(&line)?);
        }
        Ok(out)
    }

    pub fn resolve(&self) -> pgq_core::Result<(CliConfig, Vec<(String, String)>)> {
        let entries = self.entries()?;
        Ok((CliConfig::from_entries(&entries)?, entries))
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &PgqError) -> i32 {
    match e {
        PgqError::Config(_) => EXIT_USAGE,
        PgqError::Io(_) | PgqError::Format(_) | PgqError::Dimension(_) => EXIT_IO,
        PgqError::Domain(_) | PgqError::NonFinite { .. } | PgqError::Baseline(_) => EXIT_NUMERIC,
    }
}

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out`. Returns the process exit code.
pub fn run_from<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pgq: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> pgq_core::Result<i32> {
    match cmd {
        Command::Corrupt {
            input,
            output,
            opts,
        } => corrupt_cmd(&input, &output, &opts, out),
        Command::Restore {
            input,
            output,
            method,
            reference,
            opts,
        } => restore_cmd(
            &input,
            &output,
            method.into(),
            reference.as_deref(),
            &opts,
            out,
        ),
        Command::Psnr {
            estimate,
            reference,
            peak,
        } => {
            let v = psnr(
                &io::read_image(estimate)?,
                &io::read_image(reference)?,
                peak,
            )?;
            writeln!(out, "{v:.4}")?;
            Ok(EXIT_OK)
        }
        Command::Bench {
            cell,
            table,
            spec,
            output,
            format,
            no_timing,
            data_dir,
            opts,
        } => {
            let source = match (table, spec) {
                (Some(t), _) => CellSource::Table(t),
                (None, Some(p)) => CellSource::File(p),
                (None, None) if !cell.is_empty() => CellSource::Cells(cell),
                _ => {
                    return Err(PgqError::Config(
                        "bench needs --cell, --table or --spec".into(),
                    ))
                }
            };
            let format = match format {
                FormatArg::Csv => TableFormat::Csv,
                FormatArg::Markdown => TableFormat::Markdown,
            };
            let bench = BenchArgs {
                source,
                output,
                format,
                no_timing,
                data_dir,
            };
            bench_cmd(&bench, &opts, out)
        }
        Command::EmitConfig { opts } => {
            let (cfg, _) = opts.resolve()?;
            write!(out, "{}", cfg.emit())?;
            Ok(EXIT_OK)
        }
    }
}

fn corrupt_cmd(
    input: &Path,
    output: &Path,
    opts: &ModelOpts,
    out: &mut dyn Write,
) -> pgq_core::Result<i32> {
    let (cfg, _) = opts.resolve()?;
    let kernel = cfg.kernel_spec()?.build()?;
    let params = cfg.noise()?;
    let clean = io::read_image(input)?;
    let y = noise::corrupt(&clean, &kernel, &params, cfg.seed)?;
    io::save_pfm(&y, output)?;
    writeln!(out, "psnr_db {:.4}", psnr(&y, &clean, 1.0)?)?;
    Ok(EXIT_OK)
}

fn restore_cmd(
    input: &Path,
    output: &Path,
    method: Method,
    reference: Option<&Path>,
    opts: &ModelOpts,
    out: &mut dyn Write,
) -> pgq_core::Result<i32> {
    let (cfg, _) = opts.resolve()?;
    let y = io::read_image(input)?;
    let reference = reference.map(io::read_image).transpose()?;
    let kernel = cfg.kernel_spec()?.build()?;
    let result = match (method, cfg.awgn_sigma) {
        (Method::AwgnTv, Some(s)) => awgn_solve_beta(&y, &kernel, 1.0 / (s * s), &cfg.tv)?,
        _ => {
            let spec = cfg.spec("cli", vec![method])?;
            run_method(method, &y, &kernel, &cfg.noise()?, &spec)?
        }
    };
    io::save_pfm(&result.image, output)?;
    writeln!(out, "iterations {}", result.iterations)?;
    writeln!(out, "converged {}", result.converged)?;
    if let Some(r) = reference {
        writeln!(out, "psnr_db {:.4}", psnr(&result.image, &r, 1.0)?)?;
    }
    Ok(EXIT_OK)
}

enum CellSource {
    Cells(Vec<String>),
    Table(String),
    File(PathBuf),
}

struct BenchArgs {
    source: CellSource,
    output: Option<PathBuf>,
    format: TableFormat,
    no_timing: bool,
    data_dir: Option<PathBuf>,
}

fn resolve_cells(source: &CellSource) -> pgq_core::Result<Vec<ExperimentSpec>> {
    match source {
        CellSource::Table(t) => table_cells(t),
        CellSource::Cells(cells) => cells.iter().map(|c| parse_cell(c)).collect(),
        CellSource::File(p) => {
            let text = fs::read_to_string(p)?;
            let cells: Vec<ExperimentSpec> = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(parse_cell)
                .collect::<pgq_core::Result<_>>()?;
            if cells.is_empty() {
                return Err(PgqError::Config(format!(
                    "{}: no cells listed",
                    p.display()
                )));
            }
            Ok(cells)
        }
    }
}

fn bench_cmd(args: &BenchArgs, opts: &ModelOpts, out: &mut dyn Write) -> pgq_core::Result<i32> {
    let (cfg, entries) = opts.resolve()?;
    let mut specs = resolve_cells(&args.source)?;
    for spec in &mut specs {
        cfg.override_spec(spec, &entries);
        spec.validate()?;
    }
    let dir = args
        .data_dir
        .clone()
        .or_else(|| cfg.data_dir.clone())
        .unwrap_or_else(ImageCatalog::default_dir);
    let catalog = ImageCatalog::open(&dir)?;
    let threads = worker_threads();
    info!("running {} cells on {threads} workers", specs.len());
    let mut rows = run_experiments(&specs, &catalog, threads)?;
    if args.no_timing {
        rows = rows.iter().map(ResultRow::without_timing).collect();
    }
    let table = emit_table(&rows, args.format);
    match &args.output {
        Some(path) => {
            fs::write(path, &table)?;
            write!(out, "{}", emit_table(&rows, TableFormat::Markdown))?;
        }
        None => write!(out, "{table}")?,
    }
    let failures: Vec<_> = rows
        .iter()
        .flat_map(|r| r.failures.iter().map(move |f| (r, f)))
        .collect();
    for (row, f) in &failures {
        eprintln!(
            "pgq: {} seed {} {}: {}",
            row.image, f.seed, f.method, f.message
        );
    }
    Ok(if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}
