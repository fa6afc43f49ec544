//! Binary storage of a [`FrechetPanel`].
//!
//! Little-endian layout: magic `MXSP`, version `u32`, `n_maps` `u64`,
//! `n_cells` `u64`, then `n_maps * n_cells` `f64` values, map-major.

use std::io::{Read, Write};
use std::path::Path;

use crate::data::FrechetPanel;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MXSP";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

pub fn encode_panel(panel: &FrechetPanel) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * panel.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(panel.n_maps() as u64).to_le_bytes());
    out.extend_from_slice(&(panel.n_cells() as u64).to_le_bytes());
    for v in panel.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_panel(bytes: &[u8]) -> Result<FrechetPanel> {
    let bad = |msg: String| Error::Validation(format!("panel file: {msg}"));
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let n_maps = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let n_cells = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let expected = n_maps.checked_mul(n_cells).and_then(|n| n.checked_mul(8)).and_then(|n| n.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(bad(format!("size {} does not match {n_maps} x {n_cells} values", bytes.len())));
    }
    let values = bytes[HEADER_LEN..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    FrechetPanel::new(n_maps, n_cells, values)
}

pub fn write_panel(path: impl AsRef<Path>, panel: &FrechetPanel) -> Result<()> {
    let path = path.as_ref();
    let mut w = crate::data::create(path)?;
    w.write_all(&encode_panel(panel)).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_panel(path: impl AsRef<Path>) -> Result<FrechetPanel> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(path, e))?;
    decode_panel(&bytes)
}
