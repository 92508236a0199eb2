//! MPS checkpoints: a JSON header plus a little-endian binary payload.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Mps;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub n_sites: usize,
    pub phys_dims: Vec<usize>,
    pub bond_dims: Vec<usize>,
    pub center: Option<usize>,
    /// Payload file name, relative to the header's directory.
    pub payload: String,
}

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidInput(format!("checkpoint io: {e}"))
}

/// Writes `path` (header) and `path.bin` (cores, row-major, re/im interleaved).
pub fn save(mps: &Mps, path: &Path) -> Result<()> {
    let payload_path = payload_for(path);
    let header = CheckpointHeader {
        n_sites: mps.n_sites(),
        phys_dims: mps.phys_dims(),
        bond_dims: mps.bond_dims(),
        center: mps.center,
        payload: payload_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    let mut bytes = Vec::new();
    for site in &mps.cores {
        for a in site {
            for r in 0..a.nrows() {
                for col in 0..a.ncols() {
                    bytes.extend_from_slice(&a[(r, col)].re.to_le_bytes());
                    bytes.extend_from_slice(&a[(r, col)].im.to_le_bytes());
                }
            }
        }
    }
    let json = serde_json::to_string_pretty(&header).map_err(|e| Error::InvalidInput(e.to_string()))?;
    fs::write(path, json).map_err(io_err)?;
    fs::write(payload_path, bytes).map_err(io_err)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Mps> {
    let text = fs::read_to_string(path).map_err(io_err)?;
    let header: CheckpointHeader = serde_json::from_str(&text).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let n = header.n_sites;
    if header.phys_dims.len() != n || header.bond_dims.len() != n.saturating_sub(1) {
        return Err(Error::ShapeMismatch("checkpoint header dimensions".into()));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let bytes = fs::read(dir.join(&header.payload)).map_err(io_err)?;
    let mut vals = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")));
    let mut cores = Vec::with_capacity(n);
    for i in 0..n {
        let dl = if i == 0 { 1 } else { header.bond_dims[i - 1] };
        let dr = if i + 1 == n { 1 } else { header.bond_dims[i] };
        let mut site = Vec::with_capacity(header.phys_dims[i]);
        for _ in 0..header.phys_dims[i] {
            let mut a = CMat::zeros(dl, dr);
            for r in 0..dl {
                for col in 0..dr {
                    let (Some(re), Some(im)) = (vals.next(), vals.next()) else {
                        return Err(Error::ShapeMismatch("checkpoint payload too short".into()));
                    };
                    a[(r, col)] = C64::new(re, im);
                }
            }
            site.push(a);
        }
        cores.push(site);
    }
    if vals.next().is_some() {
        return Err(Error::ShapeMismatch("checkpoint payload too long".into()));
    }
    if header.center.is_some_and(|c| c >= n) {
        return Err(Error::IndexOutOfRange { index: header.center.unwrap_or(0), len: n });
    }
    Ok(Mps { cores, center: header.center })
}

fn payload_for(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".bin");
    path.with_file_name(name)
}
