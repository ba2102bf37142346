//! Binary field files: a 32-byte ASCII header `BOF1 <n> <L>` padded with
//! spaces and terminated by a newline, followed by `n` little-endian `f64`.

use std::path::Path;

use crate::error::{BoError, Result};
use crate::spectral::{Field, Grid};

pub const HEADER_LEN: usize = 32;
const MAGIC: &str = "BOF1";

pub fn field_to_bytes(f: &Field) -> Result<Vec<u8>> {
    let g = f.grid();
    let head = format!("{MAGIC} {} {:?}", g.n(), g.length());
    if head.len() > HEADER_LEN - 1 {
        return Err(BoError::InvalidGrid(format!("header `{head}` exceeds {} bytes", HEADER_LEN - 1)));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * g.n());
    out.extend_from_slice(head.as_bytes());
    out.resize(HEADER_LEN - 1, b' ');
    out.push(b'\n');
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn field_from_bytes(bytes: &[u8], path: &Path) -> Result<Field> {
    let err = |reason: String| BoError::FieldFormat { path: path.to_path_buf(), reason };
    if bytes.len() < HEADER_LEN {
        return Err(err("file shorter than the header".into()));
    }
    let head = std::str::from_utf8(&bytes[..HEADER_LEN]).map_err(|_| err("header is not ASCII".into()))?;
    let mut parts = head.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(err("missing BOF1 magic".into()));
    }
    let n: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad node count".into()))?;
    let length: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad domain length".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * n {
        return Err(err(format!("expected {} payload bytes, found {}", 8 * n, body.len())));
    }
    let grid = Grid::new(n, length)?;
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Field::from_values(&grid, values)
}

pub fn serialize_field(f: &Field, path: &Path) -> Result<()> {
    std::fs::write(path, field_to_bytes(f)?)?;
    Ok(())
}

pub fn deserialize_field(path: &Path) -> Result<Field> {
    let bytes = std::fs::read(path)?;
    field_from_bytes(&bytes, path)
}
