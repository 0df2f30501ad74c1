use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{PgqError, Result};
use crate::grid::ImageGrid;
use crate::io::read_image;

/// Directory of test images `<id>.pgm` with an optional `SHA256SUMS` file.
///
/// Images listed in `SHA256SUMS` are verified on load; a mismatch is an error.
#[derive(Debug, Clone)]
pub struct ImageCatalog {
    dir: PathBuf,
    sums: BTreeMap<String, String>,
}

impl ImageCatalog {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.is_dir() {
            return Err(PgqError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("image directory {} not found", dir.display()),
            )));
        }
        let mut sums = BTreeMap::new();
        let sums_path = dir.join("SHA256SUMS");
        if sums_path.is_file() {
            for line in fs::read_to_string(&sums_path)?.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let mut it = line.split_whitespace();
                match (it.next(), it.next()) {
                    (Some(hash), Some(name)) => {
                        sums.insert(
                            name.trim_start_matches('*').to_string(),
                            hash.to_lowercase(),
                        );
                    }
                    _ => return Err(PgqError::Format(format!("bad SHA256SUMS line {line:?}"))),
                }
            }
        }
        Ok(Self { dir, sums })
    }

    /// The `data/` directory of the repository, or `$PGQ_DATA_DIR` when set.
    pub fn default_dir() -> PathBuf {
        match std::env::var_os("PGQ_DATA_DIR") {
            Some(d) => PathBuf::from(d),
            None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"),
        }
    }

    pub fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.pgm"))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.path(id).is_file()
    }

    pub fn load(&self, id: &str) -> Result<ImageGrid> {
        let path = self.path(id);
        if !path.is_file() {
            return Err(PgqError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("test image {id:?} not found at {}", path.display()),
            )));
        }
        if let Some(expected) = self.sums.get(&format!("{id}.pgm")) {
            let actual = sha256_hex(&fs::read(&path)?);
            if &actual != expected {
                return Err(PgqError::Format(format!(
                    "checksum mismatch for {}: expected {expected}, got {actual}",
                    path.display()
                )));
            }
        }
        read_image(&path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
