use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::RealImage;

/// Square grid of cameras whose circular apertures sample the centered
/// Fourier plane of an `image_size x image_size` object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraArrayGeometry {
    image_size: usize,
    grid: usize,
    aperture_diameter: f64,
    overlap_frac: f64,
    spacing: f64,
    /// (row, col) of each pupil center in fftshifted coordinates, camera
    /// index `row_in_grid * grid + col_in_grid`.
    centers: Vec<(f64, f64)>,
}

impl CameraArrayGeometry {
    /// Builds a `grid x grid` lattice centered on DC with spacing
    /// `round(aperture_diameter * (1 - overlap_frac))`.
    pub fn new(image_size: usize, grid: usize, aperture_diameter: f64, overlap_frac: f64) -> Result<Self> {
        if image_size == 0 || !image_size.is_power_of_two() {
            return Err(Error::invalid(format!(
                "image_size must be a power of two, got {image_size}"
            )));
        }
        if grid == 0 {
            return Err(Error::invalid("grid must be at least 1"));
        }
        if !(aperture_diameter >= 1.0 && aperture_diameter.is_finite()) {
            return Err(Error::invalid(format!(
                "aperture_diameter must be >= 1, got {aperture_diameter}"
            )));
        }
        if !(0.0..1.0).contains(&overlap_frac) {
            return Err(Error::invalid(format!(
                "overlap_frac must lie in [0, 1), got {overlap_frac}"
            )));
        }

        let spacing = (aperture_diameter * (1.0 - overlap_frac)).round();
        let span = (grid - 1) as f64 * spacing + aperture_diameter;
        if span > image_size as f64 {
            return Err(Error::Geometry {
                span,
                image_size,
                required: (span.ceil() as usize).next_power_of_two(),
            });
        }

        let mid = (image_size / 2) as f64;
        let half_grid = (grid - 1) as f64 / 2.0;
        let mut centers = Vec::with_capacity(grid * grid);
        for i in 0..grid {
            for j in 0..grid {
                centers.push((
                    mid + (i as f64 - half_grid) * spacing,
                    mid + (j as f64 - half_grid) * spacing,
                ));
            }
        }

        Ok(Self {
            image_size,
            grid,
            aperture_diameter,
            overlap_frac,
            spacing,
            centers,
        })
    }

    /// Single camera whose pupil passes the whole Fourier plane, which
    /// makes the forward operator the identity under full sampling.
    pub fn full_aperture(image_size: usize) -> Result<Self> {
        if image_size == 0 || !image_size.is_power_of_two() {
            return Err(Error::invalid(format!(
                "image_size must be a power of two, got {image_size}"
            )));
        }
        let mid = (image_size / 2) as f64;
        Ok(Self {
            image_size,
            grid: 1,
            aperture_diameter: f64::INFINITY,
            overlap_frac: 0.0,
            spacing: 0.0,
            centers: vec![(mid, mid)],
        })
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn num_cameras(&self) -> usize {
        self.grid * self.grid
    }

    pub fn aperture_diameter(&self) -> f64 {
        self.aperture_diameter
    }

    pub fn overlap_frac(&self) -> f64 {
        self.overlap_frac
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn centers(&self) -> &[(f64, f64)] {
        &self.centers
    }

    /// Extent of the lattice plus one aperture, in pixels.
    pub fn span(&self) -> f64 {
        (self.grid - 1) as f64 * self.spacing + self.aperture_diameter
    }

    pub(crate) fn check_camera(&self, camera: usize) -> Result<()> {
        if camera >= self.num_cameras() {
            return Err(Error::invalid(format!(
                "camera index {camera} out of range for {} cameras",
                self.num_cameras()
            )));
        }
        Ok(())
    }

    /// Binary disc for `camera` in fftshifted (DC-centered) coordinates.
    pub fn pupil_mask(&self, camera: usize) -> Result<RealImage> {
        self.check_camera(camera)?;
        let (cr, cc) = self.centers[camera];
        let r2 = (self.aperture_diameter / 2.0).powi(2);
        let n = self.image_size;
        Ok(RealImage::from_fn(n, n, |r, c| {
            let d2 = (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2);
            if d2 <= r2 {
                1.0
            } else {
                0.0
            }
        }))
    }
}

/// Free-function form of [`CameraArrayGeometry::new`].
pub fn build_camera_array(
    image_size: usize,
    grid: usize,
    aperture_diameter: f64,
    overlap_frac: f64,
) -> Result<CameraArrayGeometry> {
    CameraArrayGeometry::new(image_size, grid, aperture_diameter, overlap_frac)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(img: &RealImage) -> usize {
        img.data().iter().filter(|&&v| v == 1.0).count()
    }

    #[test]
    fn three_by_three_fits() {
        let g = build_camera_array(64, 3, 15.0, 0.65).unwrap();
        assert_eq!(g.spacing(), 5.0);
        assert_eq!(g.span(), 25.0);
        assert_eq!(g.num_cameras(), 9);
        assert_eq!(g.centers()[0], (27.0, 27.0));
        assert_eq!(g.centers()[4], (32.0, 32.0));
        assert_eq!(g.centers()[8], (37.0, 37.0));
    }

    #[test]
    fn single_camera_sits_on_dc() {
        let g = build_camera_array(64, 1, 15.0, 0.65).unwrap();
        assert_eq!(g.centers(), &[(32.0, 32.0)]);
    }

    #[test]
    fn oversized_array_reports_requirement() {
        match build_camera_array(32, 9, 15.0, 0.65) {
            Err(Error::Geometry { span, image_size, required }) => {
                assert_eq!(span, 55.0);
                assert_eq!(image_size, 32);
                assert_eq!(required, 64);
            }
            other => panic!("expected geometry error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_camera_array(64, 0, 15.0, 0.5).is_err());
        assert!(build_camera_array(64, 3, 0.5, 0.5).is_err());
        assert!(build_camera_array(64, 3, 15.0, 1.0).is_err());
        assert!(build_camera_array(60, 3, 15.0, 0.5).is_err());
    }

    #[test]
    fn spacing_is_uniform() {
        let g = build_camera_array(128, 4, 15.0, 0.4).unwrap();
        let s = g.spacing();
        for i in 0..4 {
            for j in 1..4 {
                let a = g.centers()[i * 4 + j - 1];
                let b = g.centers()[i * 4 + j];
                assert_eq!(b.1 - a.1, s);
                assert_eq!(b.0, a.0);
            }
        }
    }

    #[test]
    fn diameter_two_gives_plus_shape() {
        let g = build_camera_array(16, 1, 2.0, 0.0).unwrap();
        let m = g.pupil_mask(0).unwrap();
        assert_eq!(count(&m), 5);
        for (r, c) in [(8, 8), (7, 8), (9, 8), (8, 7), (8, 9)] {
            assert_eq!(m.get(r, c), 1.0);
        }
    }

    #[test]
    fn disc_count_matches_enumeration() {
        let g = build_camera_array(64, 1, 15.0, 0.0).unwrap();
        let m = g.pupil_mask(0).unwrap();
        // Count integer offsets with dr^2 + dc^2 <= 7.5^2 directly.
        let mut expected = 0;
        for dr in -8i32..=8 {
            for dc in -8i32..=8 {
                if (dr * dr + dc * dc) as f64 <= 56.25 {
                    expected += 1;
                }
            }
        }
        assert_eq!(count(&m), expected);
        assert_eq!(expected, 177);
    }

    #[test]
    fn zero_overlap_masks_are_disjoint() {
        let g = build_camera_array(64, 2, 9.0, 0.0).unwrap();
        let a = g.pupil_mask(0).unwrap();
        let b = g.pupil_mask(1).unwrap();
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x * y == 0.0));
    }

    #[test]
    fn camera_index_checked() {
        let g = build_camera_array(64, 2, 9.0, 0.0).unwrap();
        assert!(g.pupil_mask(4).is_err());
    }

    #[test]
    fn full_aperture_passes_everything() {
        let g = CameraArrayGeometry::full_aperture(8).unwrap();
        assert_eq!(count(&g.pupil_mask(0).unwrap()), 64);
    }
}
