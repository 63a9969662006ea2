//! Field snapshots: a one-line text header followed by raw values.
//!
//! ```text
//! FRACCHS v1 <d> <n1> [n2] <L1> [L2]\n
//! <len * 8 bytes of little-endian f64, row-major>
//! ```
//!
//! The header floats use the shortest round-tripping decimal form, so
//! encode/decode is bit-exact in both directions.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::spectral::{Grid, RealField};
use crate::{Error, Result};

const MAGIC: &str = "FRACCHS";
const VERSION: &str = "v1";

/// Serializes one field.
pub fn encode(u: &RealField) -> Vec<u8> {
    let g = u.grid();
    let mut header = format!("{MAGIC} {VERSION} {}", g.dims());
    for axis in 0..g.dims() {
        header.push_str(&format!(" {}", g.n(axis)));
    }
    for axis in 0..g.dims() {
        header.push_str(&format!(" {}", g.extent(axis)));
    }
    header.push('\n');
    let mut out = header.into_bytes();
    out.reserve(u.values().len() * 8);
    for v in u.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Deserializes one field, validating header and payload length.
pub fn decode(bytes: &[u8]) -> Result<RealField> {
    let bad = |why: String| Error::Snapshot(why);
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| bad("header is not valid UTF-8".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 3 || tokens[0] != MAGIC || tokens[1] != VERSION {
        return Err(bad(format!("unrecognized header {header:?}")));
    }
    let dims: usize = tokens[2]
        .parse()
        .map_err(|_| bad(format!("bad dimension count {:?}", tokens[2])))?;
    if !(1..=2).contains(&dims) || tokens.len() != 3 + 2 * dims {
        return Err(bad(format!(
            "header {header:?} does not match its dimension count"
        )));
    }
    let mut n = Vec::with_capacity(dims);
    let mut extent = Vec::with_capacity(dims);
    for axis in 0..dims {
        n.push(
            tokens[3 + axis]
                .parse::<usize>()
                .map_err(|_| bad(format!("bad grid size {:?}", tokens[3 + axis])))?,
        );
        extent.push(
            tokens[3 + dims + axis]
                .parse::<f64>()
                .map_err(|_| bad(format!("bad extent {:?}", tokens[3 + dims + axis])))?,
        );
    }
    let grid = Grid::new(&n, &extent)?;
    let payload = &bytes[nl + 1..];
    if payload.len() != grid.len() * 8 {
        return Err(bad(format!(
            "payload holds {} bytes, grid needs {}",
            payload.len(),
            grid.len() * 8
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("payload contains non-finite values".into()));
    }
    RealField::from_values(grid, values)
}

/// Writes one field to `path`.
pub fn write_field(path: &Path, u: &RealField) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode(u)).map_err(|e| Error::io(path, e))
}

/// Reads one field from `path`.
pub fn read_field(path: &Path) -> Result<RealField> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
