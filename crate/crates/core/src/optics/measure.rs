use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::geometry::CameraArrayGeometry;
use super::operator::ForwardModel;
use super::sampling::SamplingMask;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::ptyt::{self, read_f64, read_u32, read_u64, read_u8, Tensor};
use crate::tensor::{fft2_inplace, ifft2_inplace, ComplexImage, RealImage};

/// dtype tag used for measurement bundles inside the PTYT container.
pub const DTYPE_MEASUREMENTS: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct CameraMeasurement {
    /// Detected magnitudes; zero wherever `mask` did not sample.
    pub magnitudes: RealImage,
    pub mask: SamplingMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    geometry: CameraArrayGeometry,
    cameras: Vec<CameraMeasurement>,
    noise_std: f64,
    master_seed: u64,
}

impl Measurements {
    pub fn new(
        geometry: CameraArrayGeometry,
        cameras: Vec<CameraMeasurement>,
        noise_std: f64,
        master_seed: u64,
    ) -> Result<Self> {
        let n = geometry.image_size();
        if cameras.len() != geometry.num_cameras() {
            return Err(Error::dim(format!(
                "{} measurements for {} cameras",
                cameras.len(),
                geometry.num_cameras()
            )));
        }
        for (l, cam) in cameras.iter().enumerate() {
            if cam.magnitudes.shape() != (n, n) || cam.mask.size() != n {
                return Err(Error::dim(format!("camera {l} does not match {n}x{n} geometry")));
            }
        }
        Ok(Self {
            geometry,
            cameras,
            noise_std,
            master_seed,
        })
    }

    pub fn geometry(&self) -> &CameraArrayGeometry {
        &self.geometry
    }

    pub fn cameras(&self) -> &[CameraMeasurement] {
        &self.cameras
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn masks(&self) -> Vec<SamplingMask> {
        self.cameras.iter().map(|c| c.mask.clone()).collect()
    }

    pub fn image_size(&self) -> usize {
        self.geometry.image_size()
    }

    /// Retained samples over all observable samples (`n * L`), in percent.
    pub fn subsampling_pct(&self) -> f64 {
        let kept: usize = self.cameras.iter().map(|c| c.mask.kept().len()).sum();
        let n = self.image_size() * self.image_size();
        kept as f64 * 100.0 / (n * self.cameras.len()) as f64
    }
}

/// Noise stream for camera `l` (0-based): splitmix64 seeded `seed + l + 1`.
pub(crate) fn camera_noise_rng(seed: u64, camera: usize) -> SplitMix64 {
    SplitMix64::new(seed.wrapping_add(camera as u64 + 1))
}

/// Simulates `y_l = |A_l x| + n_l` at the sampled pixels of each camera.
/// Gaussian noise is drawn in ascending pixel order and the result is
/// clamped at zero.
pub fn measure(
    x: &RealImage,
    geometry: &CameraArrayGeometry,
    masks: &[SamplingMask],
    noise_std: f64,
    seed: u64,
) -> Result<Measurements> {
    let n = geometry.image_size();
    if x.shape() != (n, n) {
        return Err(Error::dim(format!(
            "object is {:?}, geometry is {n}x{n}",
            x.shape()
        )));
    }
    if x.data().iter().any(|v| !(-1e-12..=1.0 + 1e-12).contains(v)) {
        return Err(Error::invalid("object must be normalized to [0, 1]"));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid(format!("noise_std must be >= 0, got {noise_std}")));
    }

    let model = ForwardModel::new(geometry, masks)?;
    let mut spectrum = ComplexImage::from_real(x);
    fft2_inplace(&mut spectrum)?;

    let mut cameras = Vec::with_capacity(masks.len());
    for (l, mask) in masks.iter().enumerate() {
        let field = model.forward_from_spectrum(&spectrum, l)?;
        let mut rng = camera_noise_rng(seed, l);
        let mut y = RealImage::zeros(n, n);
        let data = y.data_mut();
        for &k in mask.kept() {
            let k = k as usize;
            let mut v = field.data()[k].norm();
            if noise_std > 0.0 {
                v += noise_std * rng.next_normal();
            }
            data[k] = v.max(0.0);
        }
        cameras.push(CameraMeasurement {
            magnitudes: y,
            mask: mask.clone(),
        });
    }
    Measurements::new(geometry.clone(), cameras, noise_std, seed)
}

fn phase(v: Complex64) -> Complex64 {
    let m = v.norm();
    if m == 0.0 {
        Complex64::default()
    } else {
        v / m
    }
}

/// Precomputed magnitude data term `sum_l || y_l - |A_l x| ||^2` over the
/// sampled pixels.
#[derive(Debug, Clone)]
pub struct DataTerm {
    model: ForwardModel,
    targets: Vec<Vec<f64>>,
}

impl DataTerm {
    pub fn new(m: &Measurements) -> Result<Self> {
        let model = ForwardModel::new(m.geometry(), &m.masks())?;
        let targets = m
            .cameras()
            .iter()
            .map(|c| c.magnitudes.data().to_vec())
            .collect();
        Ok(Self { model, targets })
    }

    pub fn model(&self) -> &ForwardModel {
        &self.model
    }

    pub fn size(&self) -> usize {
        self.model.size()
    }

    pub(crate) fn targets(&self, camera: usize) -> &[f64] {
        &self.targets[camera]
    }

    fn check(&self, x: &ComplexImage) -> Result<()> {
        let n = self.size();
        if x.shape() != (n, n) {
            return Err(Error::dim(format!("field is {:?}, expected {n}x{n}", x.shape())));
        }
        Ok(())
    }

    pub fn loss(&self, x: &ComplexImage) -> Result<f64> {
        self.check(x)?;
        let mut spectrum = x.clone();
        fft2_inplace(&mut spectrum)?;
        let mut total = 0.0;
        for l in 0..self.model.num_cameras() {
            let u = self.model.forward_from_spectrum(&spectrum, l)?;
            let sampled = self.model.sampled(l);
            for ((v, &y), &s) in u.data().iter().zip(&self.targets[l]).zip(sampled) {
                if s {
                    total += (y - v.norm()).powi(2);
                }
            }
        }
        Ok(total)
    }

    /// Loss together with `sum_l A_l^H ((|u_l| - y_l) o phase(u_l))`,
    /// `u_l = A_l x`, `phase(0) = 0`. This is the gradient of half the loss
    /// with respect to the real and imaginary parts of `x` packed as a
    /// complex number; the directional derivative of the full loss along
    /// `h` is `2 Re <g, h>`.
    pub fn loss_and_gradient(&self, x: &ComplexImage) -> Result<(f64, ComplexImage)> {
        self.check(x)?;
        let n = self.size();
        let mut spectrum = x.clone();
        fft2_inplace(&mut spectrum)?;
        let mut acc = ComplexImage::zeros(n, n);
        let mut total = 0.0;
        // Cameras are accumulated in index order so the sum is reproducible.
        for l in 0..self.model.num_cameras() {
            let mut u = self.model.forward_from_spectrum(&spectrum, l)?;
            let sampled = self.model.sampled(l);
            for ((v, &y), &s) in u.data_mut().iter_mut().zip(&self.targets[l]).zip(sampled) {
                if s {
                    let mag = v.norm();
                    total += (y - mag).powi(2);
                    *v = phase(*v) * (mag - y);
                } else {
                    *v = Complex64::default();
                }
            }
            self.model.accumulate_adjoint_spectrum(u, l, &mut acc)?;
        }
        ifft2_inplace(&mut acc)?;
        Ok((total, acc))
    }

    /// Loss and its exact gradient for a real-valued object:
    /// `2 Re(residual gradient)`.
    pub fn loss_and_real_gradient(&self, x: &RealImage) -> Result<(f64, RealImage)> {
        let (loss, g) = self.loss_and_gradient(&ComplexImage::from_real(x))?;
        let mut grad = g.re();
        grad.data_mut().iter_mut().for_each(|v| *v *= 2.0);
        Ok((loss, grad))
    }

    pub fn loss_real(&self, x: &RealImage) -> Result<f64> {
        self.loss(&ComplexImage::from_real(x))
    }
}

/// `sum_l A_l^H ((|A_l x| - y_l) o phase(A_l x))` restricted to sampled
/// pixels. See [`DataTerm::loss_and_gradient`] for the scaling convention.
pub fn residual_gradient(x: &ComplexImage, m: &Measurements) -> Result<ComplexImage> {
    Ok(DataTerm::new(m)?.loss_and_gradient(x)?.1)
}

/// `sum_l || y_l - |A_l x| ||^2` over sampled pixels.
pub fn data_loss(x: &ComplexImage, m: &Measurements) -> Result<f64> {
    DataTerm::new(m)?.loss(x)
}

pub fn write_measurements<W: Write>(w: &mut W, m: &Measurements) -> std::io::Result<()> {
    let g = m.geometry();
    w.write_all(&ptyt::MAGIC)?;
    w.write_all(&[DTYPE_MEASUREMENTS])?;
    w.write_all(&(g.image_size() as u32).to_le_bytes())?;
    w.write_all(&(g.grid() as u32).to_le_bytes())?;
    w.write_all(&g.aperture_diameter().to_le_bytes())?;
    w.write_all(&g.overlap_frac().to_le_bytes())?;
    w.write_all(&m.noise_std().to_le_bytes())?;
    w.write_all(&m.master_seed().to_le_bytes())?;
    w.write_all(&(m.cameras().len() as u32).to_le_bytes())?;
    for cam in m.cameras() {
        ptyt::write_tensor(w, &Tensor::from(&cam.magnitudes))?;
        w.write_all(&cam.mask.seed().to_le_bytes())?;
        w.write_all(&cam.mask.fraction().to_le_bytes())?;
        w.write_all(&(cam.mask.kept().len() as u32).to_le_bytes())?;
        for &k in cam.mask.kept() {
            w.write_all(&k.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_measurements<R: Read>(r: &mut R) -> Result<Measurements> {
    let mut magic = [0u8; 4];
    ptyt::read_exact(r, &mut magic)?;
    if magic != ptyt::MAGIC {
        return Err(Error::format("bad PTYT magic"));
    }
    let dtype = read_u8(r)?;
    if dtype != DTYPE_MEASUREMENTS {
        return Err(Error::format(format!("expected measurement bundle, found dtype {dtype}")));
    }
    let image_size = read_u32(r)? as usize;
    let grid = read_u32(r)? as usize;
    let aperture = read_f64(r)?;
    let overlap = read_f64(r)?;
    let noise_std = read_f64(r)?;
    let master_seed = read_u64(r)?;
    let count = read_u32(r)? as usize;

    let geometry = if aperture.is_infinite() && grid == 1 {
        CameraArrayGeometry::full_aperture(image_size)?
    } else {
        CameraArrayGeometry::new(image_size, grid, aperture, overlap)?
    };

    let mut cameras = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let magnitudes = ptyt::read_tensor(r)?.into_real_image()?;
        let seed = read_u64(r)?;
        let fraction = read_f64(r)?;
        let kept_len = read_u32(r)? as usize;
        if kept_len > image_size * image_size {
            return Err(Error::format("mask longer than image"));
        }
        let kept = (0..kept_len).map(|_| read_u32(r)).collect::<Result<Vec<_>>>()?;
        let mask = SamplingMask::from_indices(image_size, kept, fraction, seed)?;
        cameras.push(CameraMeasurement { magnitudes, mask });
    }
    Measurements::new(geometry, cameras, noise_std, master_seed)
}

pub fn save_measurements(path: &Path, m: &Measurements) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_measurements(&mut w, m)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_measurements(path: &Path) -> Result<Measurements> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_measurements(&mut BufReader::new(file))
}
