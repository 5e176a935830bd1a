//! The per-camera linear operator `A = M F^-1 (P o F)` and its adjoint.
//!
//! Pupils are defined in DC-centered coordinates; they are stored here
//! already ifftshifted so they can multiply the raw FFT output directly.

use num_complex::Complex64;

use super::geometry::CameraArrayGeometry;
use super::sampling::SamplingMask;
use crate::error::{Error, Result};
use crate::tensor::{fft2_inplace, ifft2_inplace, ComplexImage};

#[derive(Debug, Clone)]
pub struct ForwardModel {
    size: usize,
    /// Pupil support per camera, in unshifted FFT order.
    pupils: Vec<Vec<bool>>,
    /// Detector readout mask per camera.
    samples: Vec<Vec<bool>>,
}

impl ForwardModel {
    pub fn new(geometry: &CameraArrayGeometry, masks: &[SamplingMask]) -> Result<Self> {
        let size = geometry.image_size();
        if masks.len() != geometry.num_cameras() {
            return Err(Error::dim(format!(
                "{} sampling masks for {} cameras",
                masks.len(),
                geometry.num_cameras()
            )));
        }
        let mut pupils = Vec::with_capacity(masks.len());
        let mut samples = Vec::with_capacity(masks.len());
        for (camera, mask) in masks.iter().enumerate() {
            if mask.size() != size {
                return Err(Error::dim(format!(
                    "mask {camera} is {}x{0}, geometry is {size}x{size}",
                    mask.size()
                )));
            }
            let pupil = geometry.pupil_mask(camera)?.ifftshifted();
            pupils.push(pupil.data().iter().map(|&v| v != 0.0).collect());
            samples.push(mask.to_dense());
        }
        Ok(Self {
            size,
            pupils,
            samples,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_cameras(&self) -> usize {
        self.pupils.len()
    }

    pub fn sampled(&self, camera: usize) -> &[bool] {
        &self.samples[camera]
    }

    pub(crate) fn pupil(&self, camera: usize) -> &[bool] {
        &self.pupils[camera]
    }

    fn check_input(&self, x: &ComplexImage, camera: usize) -> Result<()> {
        if x.shape() != (self.size, self.size) {
            return Err(Error::dim(format!(
                "field is {:?}, operator expects {}x{}",
                x.shape(),
                self.size,
                self.size
            )));
        }
        if camera >= self.num_cameras() {
            return Err(Error::invalid(format!("camera index {camera} out of range")));
        }
        Ok(())
    }

    /// `A_l x`: pixels outside the readout mask are exactly zero.
    pub fn forward(&self, x: &ComplexImage, camera: usize) -> Result<ComplexImage> {
        self.check_input(x, camera)?;
        let mut spectrum = x.clone();
        fft2_inplace(&mut spectrum)?;
        self.forward_from_spectrum(&spectrum, camera)
    }

    /// `A_l` applied to an already transformed object, so callers looping
    /// over cameras pay for one forward FFT.
    pub(crate) fn forward_from_spectrum(&self, spectrum: &ComplexImage, camera: usize) -> Result<ComplexImage> {
        let mut field = spectrum.clone();
        apply_support(field.data_mut(), &self.pupils[camera]);
        ifft2_inplace(&mut field)?;
        apply_support(field.data_mut(), &self.samples[camera]);
        Ok(field)
    }

    /// `A_l^H u = F^-1 (P_l o F (M_l u))`.
    pub fn adjoint(&self, u: &ComplexImage, camera: usize) -> Result<ComplexImage> {
        self.check_input(u, camera)?;
        let mut spectrum = ComplexImage::zeros(self.size, self.size);
        self.accumulate_adjoint_spectrum(u.clone(), camera, &mut spectrum)?;
        ifft2_inplace(&mut spectrum)?;
        Ok(spectrum)
    }

    /// Adds `P_l o F(M_l u)` into `acc`. Summing these over cameras and
    /// inverting once gives `sum_l A_l^H u_l`.
    pub(crate) fn accumulate_adjoint_spectrum(
        &self,
        mut u: ComplexImage,
        camera: usize,
        acc: &mut ComplexImage,
    ) -> Result<()> {
        apply_support(u.data_mut(), &self.samples[camera]);
        fft2_inplace(&mut u)?;
        let pupil = &self.pupils[camera];
        for ((a, v), &keep) in acc.data_mut().iter_mut().zip(u.data()).zip(pupil) {
            if keep {
                *a += v;
            }
        }
        Ok(())
    }
}

fn apply_support(data: &mut [Complex64], support: &[bool]) {
    for (v, &keep) in data.iter_mut().zip(support) {
        if !keep {
            *v = Complex64::default();
        }
    }
}

/// One-shot `A_l x`. Builds the operator for a single camera; use
/// [`ForwardModel`] directly when applying it repeatedly.
pub fn forward_linear(
    x: &ComplexImage,
    geometry: &CameraArrayGeometry,
    camera: usize,
    mask: &SamplingMask,
) -> Result<ComplexImage> {
    single_camera(geometry, camera, mask)?.forward(x, 0)
}

/// One-shot `A_l^H u`.
pub fn adjoint_linear(
    u: &ComplexImage,
    geometry: &CameraArrayGeometry,
    camera: usize,
    mask: &SamplingMask,
) -> Result<ComplexImage> {
    single_camera(geometry, camera, mask)?.adjoint(u, 0)
}

fn single_camera(geometry: &CameraArrayGeometry, camera: usize, mask: &SamplingMask) -> Result<ForwardModel> {
    geometry.check_camera(camera)?;
    let size = geometry.image_size();
    if mask.size() != size {
        return Err(Error::dim(format!(
            "mask is {}x{0}, geometry is {size}x{size}",
            mask.size()
        )));
    }
    let pupil = geometry.pupil_mask(camera)?.ifftshifted();
    Ok(ForwardModel {
        size,
        pupils: vec![pupil.data().iter().map(|&v| v != 0.0).collect()],
        samples: vec![mask.to_dense()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{build_camera_array, camera_masks};
    use crate::rng::SplitMix64;

    fn random_field(n: usize, seed: u64) -> ComplexImage {
        let mut rng = SplitMix64::new(seed);
        ComplexImage::from_fn(n, n, |_, _| Complex64::new(rng.next_normal(), rng.next_normal()))
    }

    fn max_abs_diff(a: &ComplexImage, b: &ComplexImage) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn full_aperture_full_sampling_is_identity() {
        let g = CameraArrayGeometry::full_aperture(16).unwrap();
        let mask = SamplingMask::full(16);
        let x = random_field(16, 1);
        let ax = forward_linear(&x, &g, 0, &mask).unwrap();
        assert!(max_abs_diff(&ax, &x) < 1e-12);
        let ahx = adjoint_linear(&x, &g, 0, &mask).unwrap();
        assert!(max_abs_diff(&ahx, &x) < 1e-12);
    }

    #[test]
    fn zero_in_zero_out() {
        let g = build_camera_array(16, 2, 5.0, 0.5).unwrap();
        let masks = camera_masks(16, 4, 0.5, 3).unwrap();
        let model = ForwardModel::new(&g, &masks).unwrap();
        let z = ComplexImage::zeros(16, 16);
        for l in 0..4 {
            assert_eq!(model.forward(&z, l).unwrap(), z);
            assert_eq!(model.adjoint(&z, l).unwrap(), z);
        }
    }

    #[test]
    fn unsampled_pixels_are_exactly_zero() {
        let g = build_camera_array(16, 2, 5.0, 0.5).unwrap();
        let masks = camera_masks(16, 4, 0.3, 9).unwrap();
        let model = ForwardModel::new(&g, &masks).unwrap();
        let x = random_field(16, 4);
        for l in 0..4 {
            let ax = model.forward(&x, l).unwrap();
            for (v, &s) in ax.data().iter().zip(model.sampled(l)) {
                if !s {
                    assert_eq!(*v, Complex64::default());
                }
            }
        }
    }

    #[test]
    fn adjoint_identity_and_self_adjoint_normal_operator() {
        let g = build_camera_array(32, 3, 9.0, 0.65).unwrap();
        let masks = camera_masks(32, 9, 0.4, 11).unwrap();
        let model = ForwardModel::new(&g, &masks).unwrap();
        for l in 0..9 {
            let x = random_field(32, 100 + l as u64);
            let u = random_field(32, 200 + l as u64);
            let lhs = model.forward(&x, l).unwrap().inner(&u).unwrap();
            let rhs = x.inner(&model.adjoint(&u, l).unwrap()).unwrap();
            assert!((lhs - rhs).norm() / (x.norm() * u.norm()) < 1e-10);

            let nx = model.adjoint(&model.forward(&x, l).unwrap(), l).unwrap();
            let nu = model.adjoint(&model.forward(&u, l).unwrap(), l).unwrap();
            let a = nx.inner(&u).unwrap();
            let b = x.inner(&nu).unwrap();
            assert!((a - b).norm() / (x.norm() * u.norm()) < 1e-10);
        }
    }

    #[test]
    fn operator_is_a_contraction() {
        let g = build_camera_array(32, 3, 9.0, 0.65).unwrap();
        let masks = camera_masks(32, 9, 0.7, 1).unwrap();
        let model = ForwardModel::new(&g, &masks).unwrap();
        let x = random_field(32, 77);
        for l in 0..9 {
            assert!(model.forward(&x, l).unwrap().norm() <= x.norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn mask_count_must_match() {
        let g = build_camera_array(16, 2, 5.0, 0.5).unwrap();
        let masks = camera_masks(16, 3, 0.5, 3).unwrap();
        assert!(ForwardModel::new(&g, &masks).is_err());
        let wrong_size = camera_masks(8, 4, 0.5, 3).unwrap();
        assert!(ForwardModel::new(&g, &wrong_size).is_err());
    }

    #[test]
    fn rejects_wrong_field_size() {
        let g = build_camera_array(16, 1, 5.0, 0.5).unwrap();
        let mask = SamplingMask::full(16);
        let x = random_field(8, 1);
        assert!(matches!(forward_linear(&x, &g, 0, &mask), Err(Error::Dimension(_))));
    }
}
