use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::RealImage;

/// Binary 8-bit PGM (P5) bytes; values are clamped to `[0, 1]` and rounded.
pub fn pgm_bytes(img: &RealImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
    out.extend(
        img.data()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

pub fn write_pgm(path: &Path, img: &RealImage) -> Result<()> {
    fs::write(path, pgm_bytes(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_quantization() {
        let img = RealImage::new(1, 3, vec![0.0, 0.5, 2.0]).unwrap();
        let bytes = pgm_bytes(&img);
        let header = b"P5\n3 1\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[0, 128, 255]);
    }
}
