use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::RealImage;

pub const IDX3_MAGIC: u32 = 0x0000_0803;
pub const IDX_SIDE: usize = 28;
pub const PADDED_SIDE: usize = 32;

/// Reads an IDX3 unsigned-byte image file (the MNIST layout), scales
/// pixels to `[0, 1]` and zero-pads each 28x28 image to 32x32.
pub fn load_idx(path: &Path) -> Result<Vec<RealImage>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx(&bytes)
}

pub fn parse_idx(bytes: &[u8]) -> Result<Vec<RealImage>> {
    let word = |i: usize| -> Result<u32> {
        bytes
            .get(4 * i..4 * i + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| Error::format("IDX header is truncated"))
    };
    let magic = word(0)?;
    if magic != IDX3_MAGIC {
        return Err(Error::format(format!("bad IDX magic {magic:#010x}, expected {IDX3_MAGIC:#010x}")));
    }
    let count = word(1)? as usize;
    let rows = word(2)? as usize;
    let cols = word(3)? as usize;
    if rows != IDX_SIDE || cols != IDX_SIDE {
        return Err(Error::format(format!("IDX images are {rows}x{cols}, expected 28x28")));
    }
    let pixels = &bytes[16..];
    let per = rows * cols;
    if pixels.len() != count * per {
        return Err(Error::format(format!(
            "IDX payload has {} bytes, header promises {}",
            pixels.len(),
            count * per
        )));
    }
    pixels
        .chunks_exact(per)
        .map(|chunk| {
            let data = chunk.iter().map(|&p| p as f64 / 255.0).collect();
            RealImage::new(rows, cols, data)?.pad_to(PADDED_SIDE, PADDED_SIDE)
        })
        .collect()
}
