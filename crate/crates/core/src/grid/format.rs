//! `GRD1` binary grid files and 8-bit PGM previews.
//!
//! `GRD1` layout, little-endian throughout:
//!
//! ```text
//! "GRD1" | u32 nx | u32 ny | f64 cell_size | f64 origin_x | f64 origin_y
//!        | nx·ny × f32 values (column-major) | ceil(nx·ny/8) bytes of mask
//! ```
//!
//! Mask bit `n` is bit `n % 8` (LSB first) of byte `n / 8`.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{GridGeometry, MaskedGrid};
use crate::error::{Error, Result};

pub const GRD_MAGIC: &[u8; 4] = b"GRD1";
const HEADER_LEN: usize = 4 + 4 + 4 + 8 * 3;

pub fn encode_grd(grid: &MaskedGrid) -> Vec<u8> {
    let g = grid.geometry();
    let n = g.len();
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * n + n.div_ceil(8));
    buf.extend_from_slice(GRD_MAGIC);
    buf.extend_from_slice(&(g.nx as u32).to_le_bytes());
    buf.extend_from_slice(&(g.ny as u32).to_le_bytes());
    buf.extend_from_slice(&g.cell_size.to_le_bytes());
    buf.extend_from_slice(&g.origin_x.to_le_bytes());
    buf.extend_from_slice(&g.origin_y.to_le_bytes());
    for k in 0..n {
        let v = grid.get_index(k).map_or(0.0, |v| v as f32);
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut bits = vec![0u8; n.div_ceil(8)];
    for (k, &m) in grid.mask().iter().enumerate() {
        if m {
            bits[k / 8] |= 1 << (k % 8);
        }
    }
    buf.extend_from_slice(&bits);
    buf
}

pub fn decode_grd(bytes: &[u8], path: &Path) -> Result<MaskedGrid> {
    let bad = |reason: &str| Error::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < HEADER_LEN || &bytes[..4] != GRD_MAGIC {
        return Err(bad("missing GRD1 header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (nx, ny) = (u32_at(4), u32_at(8));
    let geometry = GridGeometry::new(nx, ny, f64_at(12), f64_at(20), f64_at(28))
        .map_err(|e| bad(&e.to_string()))?;
    let n = geometry.len();
    let expected = HEADER_LEN + 4 * n + n.div_ceil(8);
    if bytes.len() != expected {
        return Err(bad(&format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let body = &bytes[HEADER_LEN..];
    let values = (0..n)
        .map(|k| f32::from_le_bytes(body[4 * k..4 * k + 4].try_into().unwrap()) as f64)
        .collect();
    let bits = &body[4 * n..];
    let mask = (0..n).map(|k| bits[k / 8] & (1 << (k % 8)) != 0).collect();
    MaskedGrid::from_parts(geometry, values, mask)
}

pub fn write_grd(path: impl AsRef<Path>, grid: &MaskedGrid) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_grd(grid)).map_err(|e| Error::io(path, e))
}

pub fn read_grd(path: impl AsRef<Path>) -> Result<MaskedGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grd(&bytes, path)
}

/// 8-bit binary PGM. Row 0 of the image is the top (largest `j`) row of
/// the grid. Available values are min-max scaled to `[0, 255]`;
/// unavailable cells are 0. A constant grid renders its available cells
/// at 255.
pub fn encode_pgm(grid: &MaskedGrid) -> Vec<u8> {
    let g = grid.geometry();
    let mut buf = format!("P5\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    let (lo, hi) = grid.min_max().unwrap_or((0.0, 0.0));
    let span = hi - lo;
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            let px = match grid.get(i, j) {
                None => 0,
                Some(_) if span <= 0.0 => 255,
                Some(v) => (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8,
            };
            buf.push(px);
        }
    }
    buf
}

pub fn write_pgm(path: impl AsRef<Path>, grid: &MaskedGrid) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_pgm(grid)).map_err(|e| Error::io(path, e))
}
