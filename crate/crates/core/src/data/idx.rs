//! Big-endian IDX containers as used by MNIST.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::{Error, Result, Tensor};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
const SIDE: usize = 28;
const PIXELS: usize = SIDE * SIDE;

/// Reads a file, transparently inflating gzip content.
fn read_payload(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    let chunk = bytes
        .get(offset..offset + 4)
        .ok_or_else(|| Error::Length(format!("file ends inside the {what} header field")))?;
    Ok(u32::from_be_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]))
}

fn expect_magic(bytes: &[u8], want: u32) -> Result<()> {
    let magic = be_u32(bytes, 0, "magic")?;
    if magic != want {
        return Err(Error::Format(format!(
            "magic number {magic:#010x}, expected {want:#010x}"
        )));
    }
    Ok(())
}

fn expect_payload(bytes: &[u8], header: usize, want: usize) -> Result<&[u8]> {
    let have = bytes.len() - header;
    if have != want {
        return Err(Error::Length(format!(
            "header declares {want} payload bytes, file holds {have}"
        )));
    }
    Ok(&bytes[header..])
}

/// Parses an image file into an `[N×784]` tensor scaled to `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Tensor> {
    expect_magic(bytes, IMAGE_MAGIC)?;
    let n = be_u32(bytes, 4, "count")? as usize;
    let rows = be_u32(bytes, 8, "rows")? as usize;
    let cols = be_u32(bytes, 12, "cols")? as usize;
    if rows != SIDE || cols != SIDE {
        return Err(Error::Format(format!(
            "image dimensions {rows}x{cols}, expected {SIDE}x{SIDE}"
        )));
    }
    if n == 0 {
        return Err(Error::Format("image file declares zero images".into()));
    }
    let pixels = expect_payload(bytes, 16, n * PIXELS)?;
    let data = pixels.iter().map(|&b| f64::from(b) / 255.0).collect();
    Tensor::from_vec(&[n, PIXELS], data)
}

/// Parses a label file; every label must be a digit 0–9.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    expect_magic(bytes, LABEL_MAGIC)?;
    let n = be_u32(bytes, 4, "count")? as usize;
    let payload = expect_payload(bytes, 8, n)?;
    payload
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            if b > 9 {
                Err(Error::Range(format!("label {b} at index {i} is not a digit")))
            } else {
                Ok(usize::from(b))
            }
        })
        .collect()
}

pub fn load_idx_images(path: &Path) -> Result<Tensor> {
    parse_idx_images(&read_payload(path)?)
}

pub fn load_idx_labels(path: &Path) -> Result<Vec<usize>> {
    parse_idx_labels(&read_payload(path)?)
}
