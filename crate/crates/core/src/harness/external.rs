use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{PgqError, Result};
use crate::grid::ImageGrid;
use crate::io::{read_image, save_pfm};
use crate::kernel::Kernel;
use crate::solver::BaselineEstimator;

static CALL_ID: AtomicU64 = AtomicU64::new(0);

/// AWGN baseline run as a subprocess.
///
/// The command is split on whitespace and invoked as
/// `<cmd...> <input.pfm> <sigma> <output.pfm> <kernel.pfm>`. It must write the
/// restored image to `output.pfm` and exit with status 0.
#[derive(Debug, Clone)]
pub struct ExternalBaseline {
    program: String,
    args: Vec<String>,
}

impl ExternalBaseline {
    pub fn new(cmd: &str) -> Result<Self> {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| PgqError::Config("external_baseline_cmd is empty".into()))?;
        Ok(Self {
            program,
            args: parts.collect(),
        })
    }
}

struct ScratchDir(PathBuf);

impl ScratchDir {
    fn new() -> Result<Self> {
        let id = CALL_ID.fetch_add(1, Ordering::Relaxed);
        let dir = std::env::temp_dir().join(format!("pgq-ext-{}-{id}", std::process::id()));
        std::fs::create_dir_all(&dir)?;
        Ok(Self(dir))
    }
}

impl Drop for ScratchDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

impl BaselineEstimator for ExternalBaseline {
    fn solve(&self, y: &ImageGrid, k: &Kernel, sigma: f64) -> Result<ImageGrid> {
        let scratch = ScratchDir::new()?;
        let input = scratch.0.join("input.pfm");
        let output = scratch.0.join("output.pfm");
        let kernel = scratch.0.join("kernel.pfm");
        save_pfm(y, &input)?;
        save_pfm(&k.to_grid(), &kernel)?;
        let status = Command::new(&self.program)
            .args(&self.args)
            .arg(&input)
            .arg(format!("{sigma:e}"))
            .arg(&output)
            .arg(&kernel)
            .status()
            .map_err(|e| PgqError::Baseline(format!("failed to launch {}: {e}", self.program)))?;
        if !status.success() {
            return Err(PgqError::Baseline(format!(
                "{} exited with {status}",
                self.program
            )));
        }
        let out = read_image(&output)
            .map_err(|e| PgqError::Baseline(format!("{}: unreadable output: {e}", self.program)))?;
        if !out.same_dims(y) {
            return Err(PgqError::Baseline(format!(
                "{} returned {}x{}, expected {}x{}",
                self.program,
                out.width(),
                out.height(),
                y.width(),
                y.height()
            )));
        }
        Ok(out)
    }

    fn name(&self) -> &str {
        &self.program
    }
}
