//! PSNR and SSIM for grayscale images in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::RealImage;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// `+inf` for identical images.
    pub psnr_db: f64,
    pub ssim: f64,
}

/// `10 log10(peak^2 / MSE)`; identical images give `+inf`.
pub fn psnr(x: &RealImage, reference: &RealImage, peak: f64) -> Result<f64> {
    x.same_shape(reference, "psnr")?;
    if !(peak > 0.0) {
        return Err(Error::invalid("psnr peak must be positive"));
    }
    let mse = x
        .data()
        .iter()
        .zip(reference.data())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / x.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Normalised 1-D Gaussian taps for the SSIM window.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let center = (size - 1) as f64 / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - center).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable "valid" correlation with `taps` along both axes.
fn filter_valid(data: &[f64], rows: usize, cols: usize, taps: &[f64]) -> (Vec<f64>, usize, usize) {
    let w = taps.len();
    let out_cols = cols - w + 1;
    let out_rows = rows - w + 1;
    let mut horiz = vec![0.0; rows * out_cols];
    for r in 0..rows {
        let row = &data[r * cols..(r + 1) * cols];
        for c in 0..out_cols {
            horiz[r * out_cols + c] = taps.iter().zip(&row[c..c + w]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; out_rows * out_cols];
    for r in 0..out_rows {
        for c in 0..out_cols {
            out[r * out_cols + c] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * horiz[(r + k) * out_cols + c])
                .sum();
        }
    }
    (out, out_rows, out_cols)
}

/// Mean SSIM over every fully contained 11x11 Gaussian window
/// (sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1).
pub fn ssim(x: &RealImage, reference: &RealImage) -> Result<f64> {
    x.same_shape(reference, "ssim")?;
    let (rows, cols) = x.shape();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::dim(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} images, got {rows}x{cols}"
        )));
    }
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let a = x.data();
    let b = reference.data();
    let sq = |f: &dyn Fn(usize) -> f64| (0..a.len()).map(f).collect::<Vec<f64>>();
    let aa = sq(&|i| a[i] * a[i]);
    let bb = sq(&|i| b[i] * b[i]);
    let ab = sq(&|i| a[i] * b[i]);

    let (mu_a, _, _) = filter_valid(a, rows, cols, &taps);
    let (mu_b, _, _) = filter_valid(b, rows, cols, &taps);
    let (e_aa, _, _) = filter_valid(&aa, rows, cols, &taps);
    let (e_bb, _, _) = filter_valid(&bb, rows, cols, &taps);
    let (e_ab, _, _) = filter_valid(&ab, rows, cols, &taps);

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        total += num / den;
    }
    Ok(total / mu_a.len() as f64)
}

pub fn evaluate(x: &RealImage, reference: &RealImage) -> Result<MetricReport> {
    Ok(MetricReport {
        psnr_db: psnr(x, reference, 1.0)?,
        ssim: ssim(x, reference)?,
    })
}

/// Affine map of `[-1, 1]` data onto `[0, 1]`.
pub fn remap_signed_unit(x: &RealImage) -> RealImage {
    let data = x.data().iter().map(|v| (v + 1.0) / 2.0).collect();
    RealImage::new(x.rows(), x.cols(), data).expect("shape unchanged")
}
