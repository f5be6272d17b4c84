//! Binary field snapshots.
//!
//! Layout: one ASCII header line `MHDLAB1 d n L kind`, then the raw
//! little-endian `f64` samples of each component in row-major order
//! (axis 0 slowest), one block per component.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::GridSpec;

pub const MAGIC: &str = "MHDLAB1";

/// Decoded snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: GridSpec,
    pub kind: String,
    pub components: Vec<ScalarField>,
}

pub fn encode(grid: &GridSpec, kind: &str, components: &[&[f64]]) -> Result<Vec<u8>> {
    if kind.is_empty() || kind.contains(char::is_whitespace) {
        return Err(Error::InvalidArgument(format!(
            "bad snapshot kind {kind:?}"
        )));
    }
    let mut out = format!(
        "{MAGIC} {} {} {} {}\n",
        grid.d(),
        grid.n(),
        grid.half_extent(),
        kind
    )
    .into_bytes();
    for c in components {
        if c.len() != grid.len() {
            return Err(Error::GridMismatch(
                "component length differs from grid".into(),
            ));
        }
        out.reserve(8 * c.len());
        for v in c.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    let mut reader = BufReader::new(bytes);
    let mut header = String::new();
    reader
        .read_line(&mut header)
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != MAGIC {
        return Err(Error::Format(format!(
            "bad snapshot header {:?}",
            header.trim_end()
        )));
    }
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Format(format!("bad header number {s:?}")))
    };
    let d = parse(parts[1])? as usize;
    let n = parse(parts[2])? as usize;
    let grid = GridSpec::new(d, n, parse(parts[3])?)?;
    let mut body = Vec::new();
    reader
        .read_to_end(&mut body)
        .map_err(|e| Error::Format(e.to_string()))?;
    let block = 8 * grid.len();
    if body.is_empty() || body.len() % block != 0 {
        return Err(Error::Format(format!(
            "payload of {} bytes is not a whole number of {block}-byte blocks",
            body.len()
        )));
    }
    let components = body
        .chunks(block)
        .map(|b| {
            let vals = b
                .chunks_exact(8)
                .map(|w| f64::from_le_bytes(w.try_into().expect("8 bytes")))
                .collect();
            ScalarField::new(grid, vals)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Snapshot {
        grid,
        kind: parts[4].to_string(),
        components,
    })
}

pub fn write(path: &Path, grid: &GridSpec, kind: &str, components: &[&[f64]]) -> Result<()> {
    let bytes = encode(grid, kind, components)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Snapshot> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
