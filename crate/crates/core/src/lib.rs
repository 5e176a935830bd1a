//! Fourier ptychography simulation and reconstruction with generative priors.
//!
//! The crate covers the camera-array forward model, a small decoder network
//! used as an image prior, the IERA / Deep Ptych / Deep Ptych+ solvers,
//! image metrics and an experiment harness.

pub mod error;
pub mod harness;
pub mod metrics;
pub mod optics;
pub mod optim;
pub mod prior;
pub mod rng;
pub mod solvers;
pub mod tensor;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use harness::{run_experiment, ExperimentConfig, ResultsTable, SolverKind};
pub use metrics::{psnr, ssim, MetricReport};
pub use optics::{CameraArrayGeometry, Measurements, SamplingMask};
pub use prior::GeneratorWeights;
pub use solvers::{ReconResult, SolverConfig};
pub use tensor::{ComplexImage, RealImage};
