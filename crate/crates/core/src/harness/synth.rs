use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};
use crate::tensor::RealImage;

/// Upper bound of the constant background level.
pub const BACKGROUND_MAX: f64 = 0.1;
/// Range of shape intensities.
pub const FOREGROUND_RANGE: (f64, f64) = (0.4, 1.0);

/// Deterministic shape images: each has one to three axis-aligned
/// rectangles or discs of random size, position and brightness painted
/// over a dark constant background. Image `i` depends only on `(seed, i)`.
pub fn synth_dataset(count: usize, size: usize, seed: u64) -> Result<Vec<RealImage>> {
    if count == 0 {
        return Err(Error::invalid("dataset count must be at least 1"));
    }
    if size < 4 || !size.is_power_of_two() {
        return Err(Error::dim(format!("image size {size} must be a power of two >= 4")));
    }
    Ok((0..count)
        .map(|i| synth_image(size, derive_seed(seed, &[i as u64])))
        .collect())
}

fn synth_image(size: usize, seed: u64) -> RealImage {
    let mut rng = SplitMix64::new(seed);
    let n = size as f64;
    let background = rng.uniform(0.0, BACKGROUND_MAX);
    let mut img = RealImage::filled(size, size, background);
    let shapes = 1 + rng.below(3);
    for _ in 0..shapes {
        let level = rng.uniform(FOREGROUND_RANGE.0, FOREGROUND_RANGE.1);
        if rng.below(2) == 0 {
            let h = rng.uniform(n / 8.0, n / 2.0).round() as usize;
            let w = rng.uniform(n / 8.0, n / 2.0).round() as usize;
            let top = rng.below(size - h + 1);
            let left = rng.below(size - w + 1);
            for r in top..top + h {
                for c in left..left + w {
                    img.set(r, c, level);
                }
            }
        } else {
            let radius = rng.uniform(n / 16.0, n / 4.0);
            let cy = rng.uniform(radius, n - radius);
            let cx = rng.uniform(radius, n - radius);
            for r in 0..size {
                for c in 0..size {
                    let dy = r as f64 + 0.5 - cy;
                    let dx = c as f64 + 0.5 - cx;
                    if dy * dy + dx * dx <= radius * radius {
                        img.set(r, c, level);
                    }
                }
            }
        }
    }
    img
}

/// Fraction of pixels brighter than the background level.
pub fn foreground_coverage(img: &RealImage) -> f64 {
    let (lo, _) = img.min_max();
    let bright = img.data().iter().filter(|&&v| v > lo + 1e-12).count();
    bright as f64 / img.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        let a = synth_dataset(1, 16, 9).unwrap();
        let b = synth_dataset(1, 16, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synth_dataset(1, 16, 10).unwrap());
    }

    #[test]
    fn prefix_stable() {
        let short = synth_dataset(3, 16, 4).unwrap();
        let long = synth_dataset(10, 16, 4).unwrap();
        assert_eq!(short[..], long[..3]);
    }

    #[test]
    fn values_in_unit_interval_and_coverage_band() {
        let imgs = synth_dataset(1000, 32, 1).unwrap();
        let mut coverage = 0.0;
        for img in &imgs {
            let (lo, hi) = img.min_max();
            assert!(lo >= 0.0 && hi <= 1.0);
            coverage += foreground_coverage(img);
        }
        coverage /= imgs.len() as f64;
        assert!((0.05..=0.60).contains(&coverage), "coverage {coverage}");
    }

    #[test]
    fn invalid_arguments() {
        assert!(synth_dataset(0, 16, 0).is_err());
        assert!(synth_dataset(1, 12, 0).is_err());
    }
}
