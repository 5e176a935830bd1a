//! `PTYT` binary tensor container.
//!
//! Layout: magic `b"PTYT"`, `u8` dtype (0 = real64, 1 = complex pair of
//! real64), `u8` ndim, `ndim x u32` little-endian dims, then little-endian
//! row-major data (complex values interleaved re, im).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{ComplexImage, RealImage};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"PTYT";
pub const DTYPE_REAL: u8 = 0;
pub const DTYPE_COMPLEX: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Real { dims: Vec<u32>, data: Vec<f64> },
    Complex { dims: Vec<u32>, data: Vec<Complex64> },
}

impl Tensor {
    pub fn dims(&self) -> &[u32] {
        match self {
            Tensor::Real { dims, .. } | Tensor::Complex { dims, .. } => dims,
        }
    }

    pub fn into_real_image(self) -> Result<RealImage> {
        match self {
            Tensor::Real { dims, data } if dims.len() == 2 => {
                RealImage::new(dims[0] as usize, dims[1] as usize, data)
            }
            other => Err(Error::format(format!(
                "expected 2-D real tensor, got {}-D {}",
                other.dims().len(),
                other.dtype_name()
            ))),
        }
    }

    pub fn into_complex_image(self) -> Result<ComplexImage> {
        match self {
            Tensor::Complex { dims, data } if dims.len() == 2 => {
                ComplexImage::new(dims[0] as usize, dims[1] as usize, data)
            }
            other => Err(Error::format(format!(
                "expected 2-D complex tensor, got {}-D {}",
                other.dims().len(),
                other.dtype_name()
            ))),
        }
    }

    fn dtype_name(&self) -> &'static str {
        match self {
            Tensor::Real { .. } => "real",
            Tensor::Complex { .. } => "complex",
        }
    }
}

impl From<&RealImage> for Tensor {
    fn from(img: &RealImage) -> Self {
        Tensor::Real {
            dims: vec![img.rows() as u32, img.cols() as u32],
            data: img.data().to_vec(),
        }
    }
}

impl From<&ComplexImage> for Tensor {
    fn from(img: &ComplexImage) -> Self {
        Tensor::Complex {
            dims: vec![img.rows() as u32, img.cols() as u32],
            data: img.data().to_vec(),
        }
    }
}

pub fn write_tensor<W: Write>(w: &mut W, t: &Tensor) -> std::io::Result<()> {
    w.write_all(&MAGIC)?;
    let dims = t.dims();
    let dtype = match t {
        Tensor::Real { .. } => DTYPE_REAL,
        Tensor::Complex { .. } => DTYPE_COMPLEX,
    };
    w.write_all(&[dtype, dims.len() as u8])?;
    for d in dims {
        w.write_all(&d.to_le_bytes())?;
    }
    match t {
        Tensor::Real { data, .. } => {
            for v in data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Tensor::Complex { data, .. } => {
            for v in data {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_tensor<R: Read>(r: &mut R) -> Result<Tensor> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic)?;
    if magic != MAGIC {
        return Err(Error::format(format!("bad PTYT magic {magic:02x?}")));
    }
    let dtype = read_u8(r)?;
    let ndim = read_u8(r)? as usize;
    let dims = (0..ndim).map(|_| read_u32(r)).collect::<Result<Vec<_>>>()?;
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .ok_or_else(|| Error::format("PTYT dims overflow"))?;
    match dtype {
        DTYPE_REAL => {
            let data = (0..count).map(|_| read_f64(r)).collect::<Result<_>>()?;
            Ok(Tensor::Real { dims, data })
        }
        DTYPE_COMPLEX => {
            let data = (0..count)
                .map(|_| Ok(Complex64::new(read_f64(r)?, read_f64(r)?)))
                .collect::<Result<_>>()?;
            Ok(Tensor::Complex { dims, data })
        }
        other => Err(Error::format(format!("unknown PTYT dtype {other}"))),
    }
}

pub fn tensor_to_bytes(t: &Tensor) -> Vec<u8> {
    let mut buf = Vec::new();
    write_tensor(&mut buf, t).expect("writing to a Vec cannot fail");
    buf
}

pub fn tensor_from_bytes(mut bytes: &[u8]) -> Result<Tensor> {
    read_tensor(&mut bytes)
}

pub fn save_tensor(path: &Path, t: &Tensor) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_tensor(&mut w, t)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Writes a real image as a 2-D `PTYT` file.
pub fn save_image(path: &Path, img: &RealImage) -> Result<()> {
    save_tensor(path, &Tensor::from(img))
}

/// Reads a 2-D real `PTYT` file.
pub fn load_image(path: &Path) -> Result<RealImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_tensor(&mut BufReader::new(file))?.into_real_image()
}

pub(crate) fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::format("truncated input"),
        _ => Error::format(e.to_string()),
    })
}

pub(crate) fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact(r, &mut b)?;
    Ok(b[0])
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_exact() {
        let img = RealImage::new(1, 2, vec![1.0, -2.5]).unwrap();
        let bytes = tensor_to_bytes(&Tensor::from(&img));
        assert_eq!(&bytes[..4], &[0x50, 0x54, 0x59, 0x54]);
        assert_eq!(bytes[4], 0);
        assert_eq!(bytes[5], 2);
        assert_eq!(&bytes[6..10], &1u32.to_le_bytes());
        assert_eq!(&bytes[10..14], &2u32.to_le_bytes());
        assert_eq!(&bytes[14..22], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[22..30], &(-2.5f64).to_le_bytes());
        assert_eq!(bytes.len(), 30);
    }

    #[test]
    fn complex_is_interleaved() {
        let img = ComplexImage::new(1, 1, vec![Complex64::new(3.0, 4.0)]).unwrap();
        let bytes = tensor_to_bytes(&Tensor::from(&img));
        assert_eq!(bytes[4], 1);
        assert_eq!(&bytes[14..22], &3.0f64.to_le_bytes());
        assert_eq!(&bytes[22..30], &4.0f64.to_le_bytes());
        let back = tensor_from_bytes(&bytes).unwrap().into_complex_image().unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn truncated_and_bad_magic() {
        let img = RealImage::filled(2, 2, 0.5);
        let bytes = tensor_to_bytes(&Tensor::from(&img));
        assert!(matches!(
            tensor_from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Format(_))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(tensor_from_bytes(&bad), Err(Error::Format(_))));
        assert!(matches!(tensor_from_bytes(&[]), Err(Error::Format(_))));
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let img = RealImage::filled(2, 2, 0.5);
        let t = tensor_from_bytes(&tensor_to_bytes(&Tensor::from(&img))).unwrap();
        assert!(t.into_complex_image().is_err());
    }
}
