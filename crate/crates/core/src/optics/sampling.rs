use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Subset of the `size x size` detector pixels that are actually read out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingMask {
    size: usize,
    kept: Vec<u32>,
    fraction: f64,
    seed: u64,
}

impl SamplingMask {
    /// Keeps `round(fraction * size^2)` pixels: the first entries of a
    /// seeded Fisher-Yates permutation, stored in ascending order.
    pub fn random(size: usize, fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "sampling fraction must lie in (0, 1], got {fraction}"
            )));
        }
        let total = size * size;
        let keep = ((fraction * total as f64).round() as usize).min(total);

        let mut rng = SplitMix64::new(seed);
        let mut perm: Vec<u32> = (0..total as u32).collect();
        for i in 0..keep {
            let j = i + rng.below(total - i);
            perm.swap(i, j);
        }
        perm.truncate(keep);
        perm.sort_unstable();

        Ok(Self {
            size,
            kept: perm,
            fraction,
            seed,
        })
    }

    pub fn full(size: usize) -> Self {
        Self {
            size,
            kept: (0..(size * size) as u32).collect(),
            fraction: 1.0,
            seed: 0,
        }
    }

    /// Rebuilds a mask from stored indices (sorted, unique, in range).
    pub fn from_indices(size: usize, kept: Vec<u32>, fraction: f64, seed: u64) -> Result<Self> {
        let total = size * size;
        if kept.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::format("mask indices must be strictly increasing"));
        }
        if kept.last().is_some_and(|&k| k as usize >= total) {
            return Err(Error::format("mask index out of range"));
        }
        Ok(Self {
            size,
            kept,
            fraction,
            seed,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn kept(&self) -> &[u32] {
        &self.kept
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn to_dense(&self) -> Vec<bool> {
        let mut dense = vec![false; self.size * self.size];
        for &k in &self.kept {
            dense[k as usize] = true;
        }
        dense
    }
}

pub fn sampling_mask(size: usize, fraction: f64, seed: u64) -> Result<SamplingMask> {
    SamplingMask::random(size, fraction, seed)
}

/// One independent mask per camera; camera `l` (0-based) uses seed
/// `master_seed + l + 1`.
pub fn camera_masks(size: usize, cameras: usize, fraction: f64, master_seed: u64) -> Result<Vec<SamplingMask>> {
    (0..cameras)
        .map(|l| SamplingMask::random(size, fraction, master_seed.wrapping_add(l as u64 + 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_fraction_keeps_all() {
        let m = sampling_mask(10, 1.0, 42).unwrap();
        assert_eq!(m.kept(), (0..100).collect::<Vec<u32>>().as_slice());
    }

    #[test]
    fn tenth_keeps_ten_deterministically() {
        let a = sampling_mask(10, 0.1, 5).unwrap();
        let b = sampling_mask(10, 0.1, 5).unwrap();
        assert_eq!(a.kept().len(), 10);
        assert_eq!(a, b);
    }

    #[test]
    fn neighbouring_seeds_differ() {
        let a = sampling_mask(10, 0.1, 5).unwrap();
        let b = sampling_mask(10, 0.1, 6).unwrap();
        assert_ne!(a.kept(), b.kept());
    }

    #[test]
    fn rejects_out_of_range_fraction() {
        assert!(sampling_mask(10, 0.0, 1).is_err());
        assert!(sampling_mask(10, 1.5, 1).is_err());
        assert!(sampling_mask(10, f64::NAN, 1).is_err());
    }

    #[test]
    fn from_indices_validates() {
        assert!(SamplingMask::from_indices(4, vec![1, 1], 0.1, 0).is_err());
        assert!(SamplingMask::from_indices(4, vec![3, 16], 0.1, 0).is_err());
        assert!(SamplingMask::from_indices(4, vec![0, 15], 0.1, 0).is_ok());
    }

    proptest! {
        #[test]
        fn kept_count_and_uniqueness(size in 1usize..40, fraction in 0.001f64..=1.0, seed: u64) {
            let m = sampling_mask(size, fraction, seed).unwrap();
            let total = size * size;
            prop_assert_eq!(m.kept().len(), (fraction * total as f64).round() as usize);
            prop_assert!(m.kept().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(m.kept().iter().all(|&k| (k as usize) < total));
        }
    }
}
