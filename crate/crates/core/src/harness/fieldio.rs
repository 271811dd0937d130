//! Binary field files.
//!
//! Layout, little-endian throughout:
//!
//! | bytes | content |
//! |-------|---------|
//! | 0..4  | magic `VLPF` |
//! | 4..6  | version (u16, currently 1) |
//! | 6..8  | dimension (u16) |
//! | 8     | topology (u8: 0 truncated, 1 periodic) |
//! | 9     | component count (u8: 1 scalar, 3 vector) |
//! | 10..32 | reserved, zero |
//!
//! then per axis a u32 resolution, an f64 extent and an f64 origin, then the
//! values as row-major f64, one component after the other.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, Topology, VectorField};
use crate::harness::corpus::CorpusField;

const MAGIC: &[u8; 4] = b"VLPF";
const VERSION: u16 = 1;
const HEADER: usize = 32;

pub fn encode_field(field: &CorpusField) -> Vec<u8> {
    let (grid, comps): (GridSpec, Vec<&[f64]>) = match field {
        CorpusField::Scalar(f) => (f.grid, vec![&f.values]),
        CorpusField::Vector(v) => (v.grid, v.components.iter().map(|c| c.as_slice()).collect()),
    };
    let d = grid.dimension();
    let mut out = Vec::with_capacity(HEADER + 20 * d + 8 * grid.len() * comps.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(d as u16).to_le_bytes());
    out.push(if grid.is_periodic() { 1 } else { 0 });
    out.push(comps.len() as u8);
    out.resize(HEADER, 0);
    for a in 0..d {
        out.extend_from_slice(&(grid.resolution()[a] as u32).to_le_bytes());
        out.extend_from_slice(&grid.extents()[a].to_le_bytes());
        out.extend_from_slice(&grid.origin()[a].to_le_bytes());
    }
    for c in comps {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn take<'a>(bytes: &'a [u8], at: &mut usize, n: usize) -> Result<&'a [u8]> {
    let s = bytes
        .get(*at..*at + n)
        .ok_or_else(|| Error::Format("field file is truncated".into()))?;
    *at += n;
    Ok(s)
}

pub fn decode_field(bytes: &[u8]) -> Result<CorpusField> {
    if bytes.len() < HEADER || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a VLPF field file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported field file version {version}")));
    }
    let d = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let topology = match bytes[8] {
        0 => Topology::Truncated,
        1 => Topology::Periodic,
        t => return Err(Error::Format(format!("unknown topology tag {t}"))),
    };
    let ncomp = bytes[9] as usize;
    if ncomp != 1 && ncomp != 3 {
        return Err(Error::Format(format!("unsupported component count {ncomp}")));
    }
    let mut at = HEADER;
    let (mut res, mut ext, mut org) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..d {
        res.push(u32::from_le_bytes(take(bytes, &mut at, 4)?.try_into().expect("4 bytes")) as usize);
        ext.push(f64::from_le_bytes(take(bytes, &mut at, 8)?.try_into().expect("8 bytes")));
        org.push(f64::from_le_bytes(take(bytes, &mut at, 8)?.try_into().expect("8 bytes")));
    }
    let grid = GridSpec::new(d, &ext, &res, &org, topology)?;
    let n = grid.len();
    if bytes.len() != at + 8 * n * ncomp {
        return Err(Error::Format(format!(
            "expected {} data bytes, found {}",
            8 * n * ncomp,
            bytes.len().saturating_sub(at)
        )));
    }
    let mut comps: Vec<Vec<f64>> = (0..ncomp)
        .map(|_| {
            (0..n)
                .map(|_| f64::from_le_bytes(take(bytes, &mut at, 8).expect("length checked").try_into().expect("8 bytes")))
                .collect()
        })
        .collect();
    Ok(if ncomp == 1 {
        CorpusField::Scalar(ScalarField::new(grid, comps.pop().expect("one component"))?)
    } else {
        let c2 = comps.pop().expect("three components");
        let c1 = comps.pop().expect("three components");
        let c0 = comps.pop().expect("three components");
        CorpusField::Vector(VectorField::new(grid, [c0, c1, c2])?)
    })
}

pub fn write_field(path: &Path, field: &CorpusField) -> Result<()> {
    fs::write(path, encode_field(field)).map_err(|e| Error::io(path, e))
}

pub fn read_field(path: &Path) -> Result<CorpusField> {
    decode_field(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
