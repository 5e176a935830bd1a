use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ComplexImage, RealImage};
use crate::error::{Error, Result};

/// Twiddles `exp(-2 pi i k / n)` for `k < n/2`, each evaluated directly
/// rather than by recurrence.
fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n / 2)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
        .collect()
}

fn bit_reverse_permute(buf: &mut [Complex64]) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    if bits == 0 {
        return;
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
}

/// Unitary radix-2 transform of one line. `tw` must come from `twiddles(buf.len())`.
fn fft_line(buf: &mut [Complex64], tw: &[Complex64], inverse: bool) {
    let n = buf.len();
    bit_reverse_permute(buf);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = if inverse {
                    tw[k * stride].conj()
                } else {
                    tw[k * stride]
                };
                let u = buf[start + k];
                let v = buf[start + k + half] * w;
                buf[start + k] = u + v;
                buf[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
}

fn check_pow2(img: &ComplexImage) -> Result<()> {
    let (r, c) = img.shape();
    if !r.is_power_of_two() || !c.is_power_of_two() {
        return Err(Error::dim(format!(
            "FFT needs power-of-two dimensions, got {r}x{c}"
        )));
    }
    Ok(())
}

fn transform_2d(img: &mut ComplexImage, inverse: bool) -> Result<()> {
    check_pow2(img)?;
    let (rows, cols) = img.shape();

    let tw_c = twiddles(cols);
    for row in img.data.chunks_exact_mut(cols) {
        fft_line(row, &tw_c, inverse);
    }

    let tw_r = if rows == cols { tw_c } else { twiddles(rows) };
    let mut line = vec![Complex64::default(); rows];
    for c in 0..cols {
        for (r, v) in line.iter_mut().enumerate() {
            *v = img.data[r * cols + c];
        }
        fft_line(&mut line, &tw_r, inverse);
        for (r, v) in line.iter().enumerate() {
            img.data[r * cols + c] = *v;
        }
    }
    Ok(())
}

pub fn fft2_inplace(img: &mut ComplexImage) -> Result<()> {
    transform_2d(img, false)
}

pub fn ifft2_inplace(img: &mut ComplexImage) -> Result<()> {
    transform_2d(img, true)
}

/// Unitary 2D DFT: every 1D pass is scaled by `1/sqrt(N)`, so the
/// transform preserves the l2 norm.
pub fn fft2(img: &ComplexImage) -> Result<ComplexImage> {
    let mut out = img.clone();
    fft2_inplace(&mut out)?;
    Ok(out)
}

/// Inverse of [`fft2`].
pub fn ifft2(img: &ComplexImage) -> Result<ComplexImage> {
    let mut out = img.clone();
    ifft2_inplace(&mut out)?;
    Ok(out)
}

/// Circularly shifts `data` so element `(r, c)` lands at `(r + dr, c + dc)`.
pub(crate) fn roll<T: Copy>(data: &[T], rows: usize, cols: usize, dr: usize, dc: usize) -> Vec<T> {
    let mut out = data.to_vec();
    for r in 0..rows {
        let dst_r = (r + dr) % rows;
        for c in 0..cols {
            out[dst_r * cols + (c + dc) % cols] = data[r * cols + c];
        }
    }
    out
}

/// Moves the zero-frequency sample to `(rows/2, cols/2)`.
pub fn fftshift(img: &ComplexImage) -> ComplexImage {
    let (rows, cols) = img.shape();
    ComplexImage {
        rows,
        cols,
        data: roll(&img.data, rows, cols, rows / 2, cols / 2),
    }
}

/// Inverse of [`fftshift`] (identical to it for even dimensions).
pub fn ifftshift(img: &ComplexImage) -> ComplexImage {
    let (rows, cols) = img.shape();
    ComplexImage {
        rows,
        cols,
        data: roll(&img.data, rows, cols, rows - rows / 2, cols - cols / 2),
    }
}

impl RealImage {
    pub fn fftshifted(&self) -> RealImage {
        RealImage {
            rows: self.rows,
            cols: self.cols,
            data: roll(&self.data, self.rows, self.cols, self.rows / 2, self.cols / 2),
        }
    }

    pub fn ifftshifted(&self) -> RealImage {
        let (rows, cols) = self.shape();
        RealImage {
            rows,
            cols,
            data: roll(&self.data, rows, cols, rows - rows / 2, cols - cols / 2),
        }
    }
}
