use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Magic of an unsigned-byte array with three dimensions (images).
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
/// Magic of an unsigned-byte array with one dimension (labels).
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

const UNSIGNED_BYTE: u8 = 0x08;

/// Dimensions and raw unsigned-byte payload of an IDX file.
fn parse(bytes: &[u8]) -> Result<(Vec<usize>, &[u8])> {
    if bytes.len() < 4 {
        return Err(Error::Idx(format!("file too short for a header ({} bytes)", bytes.len())));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(Error::Idx(format!("bad magic {:02x}{:02x}{:02x}{:02x}", bytes[0], bytes[1], bytes[2], bytes[3])));
    }
    if bytes[2] != UNSIGNED_BYTE {
        return Err(Error::Idx(format!("unsupported element type 0x{:02x}; only unsigned bytes (0x08)", bytes[2])));
    }
    let ndim = bytes[3] as usize;
    if ndim != 1 && ndim != 3 {
        return Err(Error::Idx(format!("bad magic: {ndim} dimensions, expected 1 (labels) or 3 (images)")));
    }
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(Error::Idx(format!("truncated header: expected {header} bytes, got {}", bytes.len())));
    }
    let dims: Vec<usize> = (0..ndim)
        .map(|i| u32::from_be_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes")) as usize)
        .collect();
    let expected: usize = dims.iter().product();
    let payload = &bytes[header..];
    if payload.len() != expected {
        return Err(Error::Idx(format!(
            "truncated payload: expected {expected} bytes, got {}",
            payload.len()
        )));
    }
    if expected == 0 {
        return Err(Error::Idx("empty array".into()));
    }
    Ok((dims, payload))
}

/// Reads an IDX file. Image files (3-D) are scaled to `[0, 1]` by `/255`;
/// label files (1-D) keep their integer values.
pub fn load_idx(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path)?;
    let (dims, payload) = parse(&bytes)?;
    let scale = if dims.len() == 3 { 255.0 } else { 1.0 };
    let data = payload.iter().map(|&b| b as f64 / scale).collect();
    Tensor::from_vec(&dims, data)
}

/// Reads a 1-D IDX label file.
pub fn load_idx_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = fs::read(path)?;
    let (dims, payload) = parse(&bytes)?;
    if dims.len() != 1 {
        return Err(Error::Idx(format!("expected a label file, got {} dimensions", dims.len())));
    }
    Ok(payload.iter().map(|&b| b as usize).collect())
}

/// Writes unsigned bytes as an IDX file with the given dimensions (one or three).
pub fn write_idx(path: &Path, dims: &[usize], payload: &[u8]) -> Result<()> {
    if dims.len() != 1 && dims.len() != 3 {
        return Err(Error::Idx(format!("write_idx supports 1 or 3 dimensions, got {}", dims.len())));
    }
    if dims.iter().product::<usize>() != payload.len() {
        return Err(Error::Idx(format!("dims {dims:?} do not match {} payload bytes", payload.len())));
    }
    let mut out = vec![0, 0, UNSIGNED_BYTE, dims.len() as u8];
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| Error::Idx(format!("dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_be_bytes());
    }
    out.extend_from_slice(payload);
    fs::write(path, out)?;
    Ok(())
}
