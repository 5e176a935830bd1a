//! Coherent camera array acquisition: pupils, detector subsampling, the
//! linear operators `A_l` and their adjoints, magnitude detection with
//! noise, and the gradient of the magnitude data term.

mod geometry;
mod measure;
mod operator;
mod sampling;

pub use geometry::{build_camera_array, CameraArrayGeometry};
pub use measure::{
    data_loss, load_measurements, measure, read_measurements, residual_gradient, save_measurements,
    write_measurements, CameraMeasurement, DataTerm, Measurements, DTYPE_MEASUREMENTS,
};
pub use operator::{adjoint_linear, forward_linear, ForwardModel};
pub use sampling::{camera_masks, sampling_mask, SamplingMask};
