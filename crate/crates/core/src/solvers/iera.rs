use num_complex::Complex64;

use super::ReconResult;
use crate::error::{Error, Result};
use crate::optics::{DataTerm, Measurements};
use crate::tensor::{fft2_inplace, ifft2_inplace, ComplexImage};

/// Iterative error reduction by alternating projections.
///
/// Keeps a spectrum estimate initialised from `F(mean_l A_l^H y_l)`. Each
/// iteration visits the cameras in order: the pupil region is taken to the
/// camera plane, measured magnitudes replace the current ones at sampled
/// pixels (phase kept, unsampled pixels untouched) and the result is
/// written back into the pupil support. Returns `|F^-1 X|` clamped to
/// `[0, 1]`; the trace holds the data residual after each iteration.
pub fn iera(m: &Measurements, iters: usize) -> Result<ReconResult> {
    if iters == 0 {
        return Err(Error::invalid("iera needs at least one iteration"));
    }
    let term = DataTerm::new(m)?;
    let model = term.model();
    let n = term.size();
    let cameras = model.num_cameras();

    let mut spectrum = ComplexImage::zeros(n, n);
    for l in 0..cameras {
        let y = ComplexImage::new(
            n,
            n,
            term.targets(l).iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )?;
        model.accumulate_adjoint_spectrum(y, l, &mut spectrum)?;
    }
    spectrum.scale(1.0 / cameras as f64);

    let initial_loss = residual(&term, &spectrum)?;
    let mut trace = Vec::with_capacity(iters);

    for iter in 0..iters {
        for l in 0..cameras {
            let pupil = model.pupil(l);
            let mut field = spectrum.clone();
            for (v, &keep) in field.data_mut().iter_mut().zip(pupil) {
                if !keep {
                    *v = Complex64::default();
                }
            }
            ifft2_inplace(&mut field)?;
            for ((v, &y), &s) in field
                .data_mut()
                .iter_mut()
                .zip(term.targets(l))
                .zip(model.sampled(l))
            {
                if s {
                    let mag = v.norm();
                    *v = if mag == 0.0 { Complex64::default() } else { *v * (y / mag) };
                }
            }
            fft2_inplace(&mut field)?;
            for ((x, v), &keep) in spectrum.data_mut().iter_mut().zip(field.data()).zip(pupil) {
                if keep {
                    *x = *v;
                }
            }
        }
        let value = residual(&term, &spectrum)?;
        if !value.is_finite() {
            return Err(Error::NonFinite { step: iter });
        }
        trace.push(value);
    }

    let mut object = spectrum;
    ifft2_inplace(&mut object)?;
    let mut x_hat = object.abs();
    x_hat.clamp01();
    Ok(ReconResult {
        x_hat,
        z_hat: None,
        initial_loss,
        steps_run: trace.len(),
        loss_trace: trace,
    })
}

fn residual(term: &DataTerm, spectrum: &ComplexImage) -> Result<f64> {
    let mut object = spectrum.clone();
    ifft2_inplace(&mut object)?;
    term.loss(&object)
}
