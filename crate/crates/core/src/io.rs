//! Grayscale PFM and PGM (P5) readers and writers.
//!
//! PFM is the interchange format: `Pf` header, little-endian single precision
//! samples (scale `-1.0`), scanlines stored bottom-to-top. PGM import maps `[0, maxval]`
//! onto `[0, 1]`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{PgqError, Result};
use crate::grid::ImageGrid;

pub fn write_pfm<W: Write>(img: &ImageGrid, mut out: W) -> Result<()> {
    write!(out, "Pf\n{} {}\n-1.0\n", img.width(), img.height())?;
    let mut buf = Vec::with_capacity(img.len() * 4);
    for r in (0..img.height()).rev() {
        for &v in img.row(r) {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn read_pfm<R: BufRead>(mut input: R) -> Result<ImageGrid> {
    let magic = next_token(&mut input)?;
    match magic.as_str() {
        "Pf" => {}
        "PF" => {
            return Err(PgqError::Format(
                "color PFM images are not supported".into(),
            ))
        }
        other => {
            return Err(PgqError::Format(format!(
                "not a PFM file (magic {other:?})"
            )))
        }
    }
    let width = parse_dim(&next_token(&mut input)?)?;
    let height = parse_dim(&next_token(&mut input)?)?;
    let scale: f64 = next_token(&mut input)?
        .parse()
        .map_err(|_| PgqError::Format("invalid PFM scale".into()))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(PgqError::Format(
            "PFM scale must be finite and nonzero".into(),
        ));
    }
    let little = scale < 0.0;
    let mut raw = vec![0u8; width * height * 4];
    input
        .read_exact(&mut raw)
        .map_err(|_| PgqError::Format("truncated PFM sample data".into()))?;
    let mut data = vec![0.0; width * height];
    for (i, chunk) in raw.chunks_exact(4).enumerate() {
        let bytes = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(bytes)
        } else {
            f32::from_be_bytes(bytes)
        };
        let (r, c) = (i / width, i % width);
        data[(height - 1 - r) * width + c] = v as f64;
    }
    ImageGrid::new(width, height, data)
}

/// Writes an 8- or 16-bit binary PGM, clamping to `[0, 1]` before scaling.
pub fn write_pgm<W: Write>(img: &ImageGrid, maxval: u16, mut out: W) -> Result<()> {
    if maxval != 255 && maxval != 65535 {
        return Err(PgqError::Format(format!("unsupported PGM maxval {maxval}")));
    }
    write!(out, "P5\n{} {}\n{}\n", img.width(), img.height(), maxval)?;
    let scale = maxval as f64;
    let mut buf = Vec::with_capacity(img.len() * if maxval > 255 { 2 } else { 1 });
    for &v in img.data() {
        let q = (v.clamp(0.0, 1.0) * scale).round() as u16;
        if maxval > 255 {
            buf.extend_from_slice(&q.to_be_bytes());
        } else {
            buf.push(q as u8);
        }
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn read_pgm<R: BufRead>(mut input: R) -> Result<ImageGrid> {
    let magic = next_token(&mut input)?;
    if magic != "P5" {
        return Err(PgqError::Format(format!(
            "not a binary PGM file (magic {magic:?})"
        )));
    }
    let width = parse_dim(&next_token(&mut input)?)?;
    let height = parse_dim(&next_token(&mut input)?)?;
    let maxval: u32 = next_token(&mut input)?
        .parse()
        .map_err(|_| PgqError::Format("invalid PGM maxval".into()))?;
    if maxval == 0 || maxval > 65535 {
        return Err(PgqError::Format(format!(
            "PGM maxval {maxval} out of range"
        )));
    }
    let bytes_per = if maxval > 255 { 2 } else { 1 };
    let mut raw = vec![0u8; width * height * bytes_per];
    input
        .read_exact(&mut raw)
        .map_err(|_| PgqError::Format("truncated PGM sample data".into()))?;
    let scale = maxval as f64;
    let data = if bytes_per == 2 {
        raw.chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / scale)
            .collect()
    } else {
        raw.iter().map(|&b| b as f64 / scale).collect()
    };
    ImageGrid::new(width, height, data)
}

/// Reads a PFM or PGM file, dispatching on the magic number.
pub fn read_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let mut reader = BufReader::new(File::open(path)?);
    let magic = reader.fill_buf()?;
    match magic.get(..2) {
        Some(b"Pf") | Some(b"PF") => read_pfm(reader),
        Some(b"P5") => read_pgm(reader),
        _ => Err(PgqError::Format(format!(
            "{}: unrecognized image format",
            path.display()
        ))),
    }
}

pub fn save_pfm(img: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    write_pfm(img, BufWriter::new(File::create(path)?))
}

pub fn save_pgm(img: &ImageGrid, maxval: u16, path: impl AsRef<Path>) -> Result<()> {
    write_pgm(img, maxval, BufWriter::new(File::create(path)?))
}

fn parse_dim(tok: &str) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(PgqError::Format(format!("invalid image dimension {tok:?}"))),
    }
}

/// Reads one whitespace-delimited header token, skipping `#` comments. Consumes
/// exactly one trailing whitespace byte so binary data starts right after.
fn next_token<R: BufRead>(input: &mut R) -> Result<String> {
    let mut tok = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if input.read(&mut byte)? == 0 {
            if tok.is_empty() {
                return Err(PgqError::Format("unexpected end of header".into()));
            }
            break;
        }
        let b = byte[0];
        if b == b'#' && tok.is_empty() {
            let mut skip = Vec::new();
            input.read_until(b'\n', &mut skip)?;
            continue;
        }
        if b.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(b);
        if tok.len() > 64 {
            return Err(PgqError::Format("header token too long".into()));
        }
    }
    String::from_utf8(tok).map_err(|_| PgqError::Format("non-ASCII header".into()))
}
