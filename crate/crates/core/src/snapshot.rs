//! PSCF field snapshots.
//!
//! Layout (little-endian): magic `b"PSCF"`, `u32` version (= 1), `u32` n,
//! n `u32` extents, then `res^n` binary64 values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::torus::{ScalarField, TorusGrid};

pub const MAGIC: [u8; 4] = *b"PSCF";
pub const VERSION: u32 = 1;

pub fn encode(field: &ScalarField) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(12 + 4 * grid.dim() + 8 * grid.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for _ in 0..grid.dim() {
        out.extend_from_slice(&(grid.res() as u32).to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write(field: &ScalarField, mut w: impl Write) -> Result<()> {
    w.write_all(&encode(field))?;
    Ok(())
}

pub fn write_file(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write(field, &mut w)?;
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| Error::Snapshot(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

/// Reads a snapshot. Extents must be equal on every axis.
pub fn read(mut r: impl Read) -> Result<ScalarField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Snapshot(format!("truncated header: {e}")))?;
    if magic != MAGIC {
        return Err(Error::Snapshot(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    if n == 0 {
        return Err(Error::Snapshot("zero dimension".into()));
    }
    let extents = (0..n).map(|_| read_u32(&mut r)).collect::<Result<Vec<_>>>()?;
    let res = extents[0] as usize;
    if extents.iter().any(|&e| e as usize != res) {
        return Err(Error::Snapshot(format!("anisotropic extents {extents:?}")));
    }
    let grid = TorusGrid::new(n, res)?;
    let mut buf = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Snapshot(format!("truncated payload: {e}")))?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ScalarField::new(&grid, values)
}

pub fn read_file(path: impl AsRef<Path>) -> Result<ScalarField> {
    read(BufReader::new(File::open(path)?))
}
