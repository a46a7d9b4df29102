//! Raster exchange format, PNG export and metadata sidecars.
//!
//! The float raster keeps lossless (single-precision) pixel values for
//! machine consumption; the PNG is a min–max-stretched 8-bit view for the
//! human eye. Layout of a `.osar` file:
//!
//! ```text
//! OSAR1 <width> <height> <dx> <dy>\n      — one ASCII header line
//! <width × height little-endian f32>       — row-major, top row first
//! ```
//!
//! `dx`/`dy` are the pixel pitches in metres, printed in shortest
//! round-trip form so reading the header back reproduces the exact `f64`.
//! Every raster written by a command gets a `.meta.json` sidecar carrying
//! the experiment hash, seeds and module versions — enough to re-run the
//! producing command. Sidecars contain no timestamps, keeping repeated
//! runs byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use oceansar_core::IntensityImage;
use serde::{Deserialize, Serialize};

use crate::{read_err, write_err, CliError, CliResult};

/// First token of a float raster header.
pub const RASTER_MAGIC: &str = "OSAR1";
/// Conventional extension for float rasters.
pub const RASTER_EXT: &str = "osar";

/// Serialize an image to the raster byte layout.
pub fn raster_bytes(image: &IntensityImage) -> Vec<u8> {
    let (nx, ny) = image.shape();
    let header = format!("{RASTER_MAGIC} {nx} {ny} {:?} {:?}\n", image.dx, image.dy);
    let mut bytes = Vec::with_capacity(header.len() + 4 * nx * ny);
    bytes.extend_from_slice(header.as_bytes());
    for v in image.pixels.iter() {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    bytes
}

/// Write an image as a float raster.
pub fn write_raster(path: &Path, image: &IntensityImage) -> CliResult<()> {
    fs::write(path, raster_bytes(image)).map_err(|e| write_err(path, e))
}

/// Read a float raster back into an image (pixel values are the stored
/// single-precision numbers, widened).
pub fn read_raster(path: &Path) -> CliResult<IntensityImage> {
    let bytes = fs::read(path).map_err(|e| read_err(path, e))?;
    let bad = |msg: String| CliError::Validation(format!("{}: {msg}", path.display()));

    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| bad("header is not ASCII".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != RASTER_MAGIC {
        return Err(bad(format!(
            "bad header '{header}' (expected '{RASTER_MAGIC} <width> <height> <dx> <dy>')"
        )));
    }
    let nx: usize = fields[1].parse().map_err(|_| bad(format!("bad width '{}'", fields[1])))?;
    let ny: usize = fields[2].parse().map_err(|_| bad(format!("bad height '{}'", fields[2])))?;
    let dx: f64 = fields[3].parse().map_err(|_| bad(format!("bad dx '{}'", fields[3])))?;
    let dy: f64 = fields[4].parse().map_err(|_| bad(format!("bad dy '{}'", fields[4])))?;

    let body = &bytes[newline + 1..];
    let want = 4 * nx * ny;
    if body.len() != want {
        return Err(bad(format!("body is {} bytes, {nx}x{ny} needs {want}", body.len())));
    }
    let mut pixels = Array2::zeros((ny, nx));
    for (slot, chunk) in pixels.iter_mut().zip(body.chunks_exact(4)) {
        *slot = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk")) as f64;
    }
    Ok(IntensityImage::new(pixels, dx, dy)?)
}

/// Round pixel values through `f32`, so an in-memory image matches what a
/// reader of its raster file sees. Metadata passes through.
pub fn quantize(image: &IntensityImage) -> CliResult<IntensityImage> {
    let pixels = image.pixels.mapv(|v| v as f32 as f64);
    let mut out = IntensityImage::new(pixels, image.dx, image.dy)?;
    out.metadata = image.metadata.clone();
    Ok(out)
}

/// Write the min–max-stretched 8-bit grayscale view. A constant image maps
/// to black.
pub fn write_png(path: &Path, image: &IntensityImage) -> CliResult<()> {
    let (nx, ny) = image.shape();
    let lo = image.pixels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = image.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let bytes: Vec<u8> = image
        .pixels
        .iter()
        .map(|&v| if span > 0.0 { ((v - lo) / span * 255.0).round() as u8 } else { 0 })
        .collect();
    let gray = image::GrayImage::from_raw(nx as u32, ny as u32, bytes)
        .expect("buffer length matches dimensions");
    gray.save_with_format(path, image::ImageFormat::Png).map_err(|e| write_err(path, e))
}

/// Machine-readable description of how an output file was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    /// What the file holds: `clean`, `noisy`, `despeckled` or `report`.
    pub role: String,
    /// Hash of the resolved experiment config (shared by all files of one
    /// run), absent for standalone single-file commands.
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub looks: Option<u32>,
    /// Despeckling method, or `noisy` for the unprocessed baseline.
    pub method: Option<String>,
    /// Crate versions that produced the file.
    pub versions: BTreeMap<String, String>,
    /// Free-form provenance notes (render statistics, solver records …).
    pub notes: Vec<String>,
}

impl Sidecar {
    pub fn new(role: &str) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("oceansar".into(), crate::VERSION.to_string());
        versions.insert("oceansar-core".into(), oceansar_core::VERSION.to_string());
        Self {
            role: role.into(),
            config_hash: None,
            seed: None,
            looks: None,
            method: None,
            versions,
            notes: Vec::new(),
        }
    }
}

/// Sidecar path for a raster: `scene.osar` → `scene.meta.json`.
pub fn sidecar_path(raster: &Path) -> PathBuf {
    raster.with_extension("meta.json")
}

pub fn write_sidecar(raster: &Path, sidecar: &Sidecar) -> CliResult<PathBuf> {
    let path = sidecar_path(raster);
    let json = serde_json::to_string_pretty(sidecar)
        .map_err(|e| CliError::Runtime(format!("cannot serialize sidecar: {e}")))?;
    fs::write(&path, json + "\n").map_err(|e| write_err(&path, e))?;
    Ok(path)
}

/// Best-effort sidecar load; `None` when the file is absent or malformed
/// (consumers fall back to filename heuristics).
pub fn read_sidecar(raster: &Path) -> Option<Sidecar> {
    let text = fs::read_to_string(sidecar_path(raster)).ok()?;
    serde_json::from_str(&text).ok()
}
