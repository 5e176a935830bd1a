//! Dense 2D real and complex images plus the unitary FFT they are
//! transformed with.

mod fft;
pub mod ptyt;

pub use ptyt::{load_image, save_image};

pub use fft::{fft2, fft2_inplace, fftshift, ifft2, ifft2_inplace, ifftshift};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major complex field.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// Row-major real image. Normalized images live in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

fn check_shape(rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::dim(format!("empty image shape {rows}x{cols}")));
    }
    if rows * cols != len {
        return Err(Error::dim(format!(
            "{rows}x{cols} image needs {} values, got {len}",
            rows * cols
        )));
    }
    Ok(())
}

macro_rules! image_common {
    ($ty:ident, $elem:ty) => {
        impl $ty {
            pub fn new(rows: usize, cols: usize, data: Vec<$elem>) -> Result<Self> {
                check_shape(rows, cols, data.len())?;
                Ok(Self { rows, cols, data })
            }

            pub fn zeros(rows: usize, cols: usize) -> Self {
                Self {
                    rows,
                    cols,
                    data: vec![<$elem>::default(); rows * cols],
                }
            }

            pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> $elem) -> Self {
                let mut data = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for c in 0..cols {
                        data.push(f(r, c));
                    }
                }
                Self { rows, cols, data }
            }

            pub fn rows(&self) -> usize {
                self.rows
            }

            pub fn cols(&self) -> usize {
                self.cols
            }

            pub fn len(&self) -> usize {
                self.data.len()
            }

            pub fn is_empty(&self) -> bool {
                self.data.is_empty()
            }

            pub fn shape(&self) -> (usize, usize) {
                (self.rows, self.cols)
            }

            pub fn data(&self) -> &[$elem] {
                &self.data
            }

            pub fn data_mut(&mut self) -> &mut [$elem] {
                &mut self.data
            }

            pub fn into_data(self) -> Vec<$elem> {
                self.data
            }

            pub fn get(&self, r: usize, c: usize) -> $elem {
                self.data[r * self.cols + c]
            }

            pub fn set(&mut self, r: usize, c: usize, v: $elem) {
                self.data[r * self.cols + c] = v;
            }

            pub fn same_shape(&self, other: &Self, what: &str) -> Result<()> {
                if self.shape() != other.shape() {
                    return Err(Error::dim(format!(
                        "{what}: shape {:?} vs {:?}",
                        self.shape(),
                        other.shape()
                    )));
                }
                Ok(())
            }
        }
    };
}

image_common!(ComplexImage, Complex64);
image_common!(RealImage, f64);

impl ComplexImage {
    pub fn from_real(img: &RealImage) -> Self {
        Self {
            rows: img.rows,
            cols: img.cols,
            data: img.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn re(&self) -> RealImage {
        self.map_real(|v| v.re)
    }

    pub fn abs(&self) -> RealImage {
        self.map_real(|v| v.norm())
    }

    fn map_real(&self, f: impl Fn(Complex64) -> f64) -> RealImage {
        RealImage {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self, other> = sum(conj(self) * other)`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.same_shape(other, "inner product")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scale(&mut self, k: f64) {
        self.data.iter_mut().for_each(|v| *v *= k);
    }

    pub fn add_scaled(&mut self, other: &Self, k: Complex64) -> Result<()> {
        self.same_shape(other, "add_scaled")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += k * b;
        }
        Ok(())
    }
}

impl RealImage {
    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    pub fn clamp01(&mut self) {
        self.data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Zero-pads symmetrically (extra row/col goes to the bottom/right) to
    /// `rows x cols`.
    pub fn pad_to(&self, rows: usize, cols: usize) -> Result<RealImage> {
        if rows < self.rows || cols < self.cols {
            return Err(Error::dim(format!(
                "cannot pad {}x{} to smaller {rows}x{cols}",
                self.rows, self.cols
            )));
        }
        let top = (rows - self.rows) / 2;
        let left = (cols - self.cols) / 2;
        let mut out = RealImage::zeros(rows, cols);
        for r in 0..self.rows {
            let src = &self.data[r * self.cols..(r + 1) * self.cols];
            let start = (r + top) * cols + left;
            out.data[start..start + self.cols].copy_from_slice(src);
        }
        Ok(out)
    }
}

/// Elementwise complex product.
pub fn hadamard(a: &ComplexImage, b: &ComplexImage) -> Result<ComplexImage> {
    a.same_shape(b, "hadamard")?;
    Ok(ComplexImage {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_bad_length() {
        assert!(RealImage::new(2, 3, vec![0.0; 5]).is_err());
        assert!(ComplexImage::new(0, 3, vec![]).is_err());
    }

    #[test]
    fn hadamard_identity_and_zero() {
        let a = ComplexImage::from_fn(4, 4, |r, cc| c(r as f64, cc as f64 - 1.0));
        let ones = ComplexImage::new(4, 4, vec![c(1.0, 0.0); 16]).unwrap();
        let zeros = ComplexImage::zeros(4, 4);
        assert_eq!(hadamard(&a, &ones).unwrap(), a);
        assert_eq!(hadamard(&a, &zeros).unwrap(), zeros);
    }

    #[test]
    fn hadamard_conjugate_pair() {
        let a = ComplexImage::new(1, 1, vec![c(1.0, 1.0)]).unwrap();
        let b = ComplexImage::new(1, 1, vec![c(1.0, -1.0)]).unwrap();
        assert_eq!(hadamard(&a, &b).unwrap().data()[0], c(2.0, 0.0));
    }

    #[test]
    fn hadamard_shape_mismatch() {
        let a = ComplexImage::zeros(4, 4);
        let b = ComplexImage::zeros(4, 8);
        assert!(matches!(hadamard(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn pad_centers_image() {
        let img = RealImage::filled(2, 2, 1.0);
        let p = img.pad_to(4, 4).unwrap();
        assert_eq!(p.get(0, 0), 0.0);
        assert_eq!(p.get(1, 1), 1.0);
        assert_eq!(p.get(2, 2), 1.0);
        assert_eq!(p.get(3, 3), 0.0);
    }
}
