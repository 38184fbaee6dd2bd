//! Portable float maps, single channel.
//!
//! Layout: `Pf`, width and height, a scale whose sign gives the byte order
//! (negative = little-endian), then `f32` rows from the bottom row up.
//! Invalid disparities are stored as `+inf`.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::volume::DisparityMap;

/// Serializes `grid` little-endian.
pub fn encode_pfm(grid: &Array2<f32>) -> Vec<u8> {
    let (h, w) = grid.dim();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * h * w);
    for row in grid.rows().into_iter().rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), reason: reason.into() }
}

/// Next whitespace-delimited token starting at `*pos`.
fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}

pub fn decode_pfm(bytes: &[u8], path: &Path) -> Result<Array2<f32>> {
    let mut pos = 0;
    let magic = token(bytes, &mut pos).ok_or_else(|| format_err(path, "empty file"))?;
    match magic {
        b"Pf" => {}
        b"PF" => {
            return Err(Error::Unsupported {
                path: path.to_path_buf(),
                reason: "three-channel PF maps are not supported".into(),
            })
        }
        _ => return Err(format_err(path, "missing Pf header")),
    }
    let mut number = |what: &str| -> Result<String> {
        let t = token(bytes, &mut pos).ok_or_else(|| format_err(path, format!("missing {what}")))?;
        String::from_utf8(t.to_vec()).map_err(|_| format_err(path, format!("non-ASCII {what}")))
    };
    let w: usize = number("width")?.parse().map_err(|_| format_err(path, "bad width"))?;
    let h: usize = number("height")?.parse().map_err(|_| format_err(path, "bad height"))?;
    let scale: f64 = number("scale")?.parse().map_err(|_| format_err(path, "bad scale"))?;
    if w == 0 || h == 0 {
        return Err(format_err(path, "zero dimension"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(format_err(path, "scale must be non-zero"));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(format_err(path, "truncated header"));
    }
    pos += 1;
    let payload = &bytes[pos..];
    let need = 4 * w * h;
    if payload.len() < need {
        return Err(format_err(path, format!("payload has {} bytes, expected {need}", payload.len())));
    }
    let little = scale < 0.0;
    let mut grid = Array2::zeros((h, w));
    for (i, chunk) in payload[..need].chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        grid[[h - 1 - i / w, i % w]] = v;
    }
    Ok(grid)
}

pub fn write_pfm(path: impl AsRef<Path>, grid: &Array2<f32>) -> Result<()> {
    fs::write(path, encode_pfm(grid))?;
    Ok(())
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<Array2<f32>> {
    let path = path.as_ref();
    decode_pfm(&fs::read(path)?, path)
}

/// Writes valid disparities as `f32`, invalid ones as `+inf`.
pub fn write_disparity_pfm(path: impl AsRef<Path>, map: &DisparityMap) -> Result<()> {
    let grid = Array2::from_shape_fn(map.dim(), |(y, x)| {
        if map.is_valid(y, x) {
            map.get(y, x) as f32
        } else {
            f32::INFINITY
        }
    });
    write_pfm(path, &grid)
}

/// Non-finite and negative entries become invalid pixels.
pub fn read_disparity_pfm(path: impl AsRef<Path>) -> Result<DisparityMap> {
    let grid = read_pfm(path)?;
    let mask = grid.mapv(|v| v.is_finite() && v >= 0.0);
    let values = grid.mapv(|v| if v.is_finite() && v >= 0.0 { v as f64 } else { 0.0 });
    DisparityMap::new(values, mask)
}
