//! Three-channel float raster dumps.
//!
//! Layout: 8-byte magic, `u32` height, `u32` width (little-endian), then for
//! each frame three row-major planes of little-endian `f32`.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::phase::AccumulatedMotion;
use crate::roi::{FeatureMap, FEATURE_SIZE};
use crate::{Error, Result};

pub const PHASE_MAGIC: &[u8; 8] = b"RMESPHS1";
pub const FEATURE_MAGIC: &[u8; 8] = b"RMESFTR1";

pub fn write_raster<'a, W: Write>(
    mut w: W,
    magic: &[u8; 8],
    width: usize,
    height: usize,
    frames: impl IntoIterator<Item = [&'a [f64]; 3]>,
) -> std::io::Result<()> {
    w.write_all(magic)?;
    w.write_all(&(height as u32).to_le_bytes())?;
    w.write_all(&(width as u32).to_le_bytes())?;
    for planes in frames {
        for p in planes {
            debug_assert_eq!(p.len(), width * height);
            for v in p {
                w.write_all(&(*v as f32).to_le_bytes())?;
            }
        }
    }
    w.flush()
}

/// Returns `(width, height, frames)`, each frame `3 · width · height` values.
pub fn read_raster<R: Read>(mut r: R, magic: &[u8; 8]) -> Result<(usize, usize, Vec<Vec<f64>>)> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)
        .map_err(|e| Error::BadRaster(e.to_string()))?;
    if buf.len() < 16 || &buf[..8] != magic {
        return Err(Error::BadRaster(format!(
            "expected magic {}",
            String::from_utf8_lossy(magic)
        )));
    }
    let height = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    let width = u32::from_le_bytes(buf[12..16].try_into().unwrap()) as usize;
    let frame_bytes = 3 * 4 * width * height;
    let body = &buf[16..];
    if frame_bytes == 0 || body.len() % frame_bytes != 0 {
        return Err(Error::BadRaster(format!(
            "{} payload bytes is not a whole number of {width}x{height} frames",
            body.len()
        )));
    }
    let frames = body
        .chunks_exact(frame_bytes)
        .map(|f| {
            f.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect()
        })
        .collect();
    Ok((width, height, frames))
}

fn create(path: &Path) -> Result<BufWriter<std::fs::File>> {
    Ok(BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

pub fn write_features(path: &Path, maps: &[FeatureMap]) -> Result<()> {
    let frames = maps.iter().map(|m| [m.channel(0), m.channel(1), m.channel(2)]);
    write_raster(create(path)?, FEATURE_MAGIC, FEATURE_SIZE, FEATURE_SIZE, frames)
        .map_err(|e| Error::io(path, e))
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureMap>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let (w, h, frames) = read_raster(BufReader::new(f), FEATURE_MAGIC)?;
    if (w, h) != (FEATURE_SIZE, FEATURE_SIZE) {
        return Err(Error::BadRaster(format!("feature maps must be 30x30, found {w}x{h}")));
    }
    frames.into_iter().map(FeatureMap::from_vec).collect()
}

/// Debug dump of `(U, V, M)` maps.
pub fn write_motion(path: &Path, maps: &[AccumulatedMotion]) -> Result<()> {
    let (w, h) = maps.first().map_or((0, 0), |m| m.dims());
    write_raster(create(path)?, PHASE_MAGIC, w, h, maps.iter().map(|m| m.channels()))
        .map_err(|e| Error::io(path, e))
}
